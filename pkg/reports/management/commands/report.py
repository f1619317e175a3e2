from geoanalysis.utils.base_command import EngineCommand


class Command(EngineCommand):
    help = "🎓 Run the operation named in the suite configuration (all families by default) and write every report"
