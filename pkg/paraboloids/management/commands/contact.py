from geoanalysis.utils.base_command import EngineCommand


class Command(EngineCommand):
    help = "🎓 Compute touching-paraboloid contact sets for every scene and opening, with dumps and monotonicity checks"
    operation = 'contact'
