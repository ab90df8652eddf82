import logging
from pathlib import Path

from .dependencies import as_strings
from .manifest import CommandResult, read_manifest
from .registry import CommandRouter, arg, working_directory

router = CommandRouter(tags=["replay"])
logger = logging.getLogger(__name__)


@router.command("replay", help="Re-run the command recorded in a manifest", arguments=[
    arg("manifest", type=Path, help="A <command>.manifest.json file"),
    arg("--out", type=Path, default=None, help="Write outputs here instead of the recorded directory"),
])
def replay(args, app) -> CommandResult:
    manifest_file = args.manifest.resolve()
    manifest = read_manifest(manifest_file)
    if manifest.command == "replay":
        raise ValueError("Replaying a replay manifest is not supported; replay the original command's manifest")

    out_dir = args.out.resolve() if args.out is not None else Path(manifest.out_dir)
    # The last --out wins in argparse, so appending pins the output directory
    argv = manifest.argv + ["--out", str(out_dir)]
    logger.info(f"[CLI] Replaying command={manifest.command} from {manifest_file} into {out_dir}")
    with working_directory(manifest.cwd):
        result, _ = app.dispatch(argv)

    return CommandResult(
        out_dir=result.out_dir.resolve(),
        config={"manifest": str(manifest_file), "command": manifest.command, "argv": argv},
        seed=manifest.seed,
        inputs=[str(manifest_file)] + result.inputs,
        outputs=as_strings(result.outputs),
    )
