from geoanalysis.utils.base_command import EngineCommand


class Command(EngineCommand):
    help = "🎓 Run the barrier measure-to-point pipeline and the weak Harnack ladder on every scene"
    operation = 'harnack'
