from geoanalysis.utils.base_command import EngineCommand


class Command(EngineCommand):
    help = "🎓 Test every scene against the (m, h) condition with random quadratic test functions"
    operation = 'viscosity'
