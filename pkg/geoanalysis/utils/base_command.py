from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from geoanalysis.exceptions.exceptions import ConfigurationError, SceneError
from reports.config import load_run_config
from reports.runner import build_scenes, run, write_outputs


class EngineCommand(BaseCommand):
    """
    Shared surface of the engine subcommands.

    ``operation`` pins the subcommand to one operation family; ``None``
    keeps the operation named in the configuration.
    """
    operation = None

    def add_arguments(self, parser):
        parser.add_argument('--config', default=str(settings.DEFAULT_SUITE_CONFIG), help="Suite configuration (sectioned key-value text)")
        parser.add_argument('--out', help="Output directory (overrides [run] out)")
        parser.add_argument('--threads', type=int, help="Worker threads (overrides [run] threads)")
        parser.add_argument('--seed', type=int, help="Single seed (overrides [run] seeds)")
        parser.add_argument('--svg', action='store_true', default=None, help="Also write SVG plots")

    def load_config(self, options):
        """RunConfig with the command-line overrides applied; misuse exits with status 2."""
        try:
            config = load_run_config(options['config'])
        except ConfigurationError as exc:
            raise CommandError(f"❌ {options['config']}: {exc}", returncode=2) from exc

        threads = options.get('threads')
        if threads is not None and threads < 1:
            raise CommandError("❌ --threads must be at least 1", returncode=2)
        seed = options.get('seed')
        if seed is not None and seed < 0:
            raise CommandError("❌ --seed must be non-negative", returncode=2)
        out = options.get('out')
        return config.with_overrides(
            operation=self.operation,
            threads=threads,
            seeds=(seed,) if seed is not None else None,
            svg=options.get('svg'),
            out=Path(out) if out is not None else None,
        )

    def build(self, config):
        try:
            return build_scenes(config)
        except SceneError as exc:
            raise CommandError(f"❌ {exc}", returncode=2) from exc

    def handle(self, *args, **options):
        # ============================================================
        # 1️⃣ Load configuration
        # ============================================================
        config = self.load_config(options)
        self.stdout.write(self.style.NOTICE(f"📂 Loaded {config.source} (hash {config.config_hash[:8]})"))

        # ============================================================
        # 2️⃣ Build scenes
        # ============================================================
        scenes = self.build(config)
        for gamma in scenes:
            self.stdout.write(self.style.NOTICE(
                f"🧩 {gamma.scene_id}: {len(gamma.points)} samples at rho={gamma.resolution:.6g}"
            ))

        # ============================================================
        # 3️⃣ Run and emit
        # ============================================================
        outcome = run(config, scenes)
        paths = write_outputs(outcome)
        self.stdout.write(self.style.SUCCESS(f"✅ Wrote {len(paths)} files to {config.out}"))

        # ============================================================
        # ✅ Summary
        # ============================================================
        verdicts = outcome.verdicts
        for verdict, count in sorted(verdicts.items()):
            style = self.style.ERROR if verdict == 'fails' else self.style.SUCCESS if verdict in ('holds', 'passes') else self.style.WARNING
            self.stdout.write(style(f"   {verdict}: {count}"))
        summary = ", ".join(f"{count} {verdict}" for verdict, count in sorted(verdicts.items())) or "no rows"
        if outcome.failed:
            raise CommandError(f"❌ {verdicts['fails']} verdict(s) fail: {summary}", returncode=1)
        self.stdout.write(self.style.SUCCESS(f"🎯 Done — {summary}."))
