from geoanalysis.utils.base_command import EngineCommand


class Command(EngineCommand):
    help = "🎓 Sample the normal bundle, estimate principal curvatures and check the trace and contact bounds"
    operation = 'curvature'
