"""Command line interface: extract, diagnostics, phantom and nomenclature."""
from __future__ import annotations

import sys
from dataclasses import replace

import click

from ..catalogue import CATALOGUE, FAMILIES
from ..errors import ConfigurationError, DataError, RadfeatError
from ..volume import read_contours
from .config import load_config, preset
from .io import load_mask, load_volume
from .nomenclature import nomenclature
from .phantom import golden_checks
from .report import diagnostics_csv, report_paths, write_figures, write_report
from .run import THREADS_ENV, default_threads, run_pipeline
from .synthetic import synthetic_ct

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


def _config(name, path, seed):
    base = preset(name) if name else None
    if path:
        cfg = load_config(path, base)
    elif base is not None:
        cfg = base
    else:
        raise click.UsageError("give --config A..E or --config-file")
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _inputs(image, mask, contours, synthetic, synthetic_seed):
    if synthetic:
        if image or mask or contours:
            raise click.UsageError("--synthetic cannot be combined with --image/--mask/--contours")
        return synthetic_ct(synthetic, seed=synthetic_seed)
    if not image:
        raise click.UsageError("give --image (or --synthetic N)")
    if bool(mask) == bool(contours):
        raise click.UsageError("give exactly one of --mask or --contours")
    img = load_volume(image)
    roi = load_mask(mask, img.geometry) if mask else read_contours(contours)
    return img, roi


_input_options = [
    click.option("--image", type=click.Path(dir_okay=False), help="Image volume (.nii, .nii.gz or .rhdr)."),
    click.option("--mask", type=click.Path(dir_okay=False), help="ROI mask volume on the image grid."),
    click.option("--contours", type=click.Path(dir_okay=False), help="ROI contour file ('slice z=<mm>' blocks of x y vertices)."),
    click.option("--synthetic", type=click.IntRange(8, 512), help="Use a generated CT-like N^3 volume."),
    click.option("--synthetic-seed", type=int, default=1, show_default=True),
    click.option("--config", "config_name", type=click.Choice(list("ABCDE"), case_sensitive=False),
                 help="Processing preset."),
    click.option("--config-file", type=click.Path(dir_okay=False),
                 help="Configuration file; overrides --config fields."),
    click.option("--seed", type=int, help="Seed for subsampled features (overrides the config)."),
]


def _with_inputs(f):
    for opt in reversed(_input_options):
        f = opt(f)
    return f


@click.group()
@click.version_option(package_name="artifact", prog_name="radfeat")
def cli():
    """Radiomics feature extraction."""


@cli.command()
@_with_inputs
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Report path.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--threads", type=click.IntRange(1, 1024),
              help=f"Worker threads (default: ${THREADS_ENV} or all cores).")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render IVH and histogram figures next to the report.")
def extract(image, mask, contours, synthetic, synthetic_seed, config_name, config_file, seed,
            out, fmt, threads, figures):
    """Compute every configured feature and write a report."""
    cfg = _config(config_name, config_file, seed)
    img, roi = _inputs(image, mask, contours, synthetic, synthetic_seed)
    report, diag = run_pipeline(img, roi, cfg, threads=threads or default_threads())
    path, prefix = report_paths(out, fmt)
    write_report(report, diag, fmt, path)
    written = [path]
    if figures:
        written += write_figures(report, prefix)
    click.echo(f"{len(report)} features, config {cfg.name} ({report.fingerprint})", err=True)
    for p in written:
        click.echo(f"wrote {p}", err=True)


@cli.command()
@_with_inputs
@click.option("--out", type=click.Path(dir_okay=False), help="CSV path (default: stdout).")
def diagnostics(image, mask, contours, synthetic, synthetic_seed, config_name, config_file, seed, out):
    """Print image and ROI descriptors at each processing stage."""
    cfg = _config(config_name, config_file, seed)
    cfg = replace(cfg, families=())
    img, roi = _inputs(image, mask, contours, synthetic, synthetic_seed)
    _, diag = run_pipeline(img, roi, cfg, threads=1)
    text = diagnostics_csv(diag)
    if out:
        try:
            with open(out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise DataError(f"cannot write {out}: {exc.strerror}") from None
    else:
        click.echo(text, nl=False)


@cli.command()
def phantom():
    """Check texture matrices against the bundled 4x4 worked example."""
    ok = True
    for name, passed, note in golden_checks():
        known = name.endswith("(as printed)")
        click.echo(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  [{note}]" if note else ""))
        if not passed and not known:
            ok = False
    if not ok:
        sys.exit(EXIT_INTERNAL)


@cli.command(name="nomenclature")
@click.option("--config", "config_name", type=click.Choice(list("ABCDE"), case_sensitive=False),
              help="Render names with this preset's subscript.")
@click.option("--family", type=click.Choice(list(FAMILIES)), help="Only this family.")
def nomenclature_cmd(config_name, family):
    """Print the feature catalogue with permanent identifiers."""
    cfg = preset(config_name) if config_name else None
    for key, f in CATALOGUE.items():
        if family and f.family != family:
            continue
        click.echo(f"{f.id}\t{key}\t{nomenclature(key, cfg)}")


def main(argv=None):
    try:
        rv = cli.main(args=argv, prog_name="radfeat", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except (click.UsageError, click.exceptions.Abort) as exc:
        if isinstance(exc, click.UsageError):
            exc.show()
        return EXIT_USAGE
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return EXIT_USAGE
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA
    except RadfeatError as exc:
        click.echo(f"internal error: {exc}", err=True)
        return EXIT_INTERNAL
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the documented exit code
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_INTERNAL
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
