from geoanalysis.utils.base_command import EngineCommand


class Command(EngineCommand):
    help = "🎓 Verify the ABP inequality, the projection bound and the Savin ratio for every scene and opening"
    operation = 'abp'
