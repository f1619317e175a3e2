from geoanalysis.utils.base_command import EngineCommand
from setmodel.utils.point_io import dump_points


class Command(EngineCommand):
    help = "🎓 Build every configured scene and dump its sample points"

    def handle(self, *args, **options):
        # ============================================================
        # 1️⃣ Load configuration and build scenes
        # ============================================================
        config = self.load_config(options)
        scenes = self.build(config)

        # ============================================================
        # 2️⃣ Dump points
        # ============================================================
        folder = config.out / 'scenes'
        folder.mkdir(parents=True, exist_ok=True)
        written, empty = 0, 0
        for gamma in scenes:
            path = folder / f"{gamma.scene_id}-rho{gamma.resolution:.6g}.csv"
            dump_points(gamma, path)
            if len(gamma.points):
                self.stdout.write(self.style.SUCCESS(f"✅ {gamma.scene_id}: {len(gamma.points)} points → {path.name}"))
                written += 1
            else:
                self.stdout.write(self.style.WARNING(f"⚠️ {gamma.scene_id}: no samples inside the cylinder"))
                empty += 1

        # ============================================================
        # ✅ Summary
        # ============================================================
        self.stdout.write(self.style.SUCCESS(f"🎯 Done — {written} scenes dumped, {empty} empty."))
