import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'geoanalysis.settings')
django.setup()
