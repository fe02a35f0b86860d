import csv
import json
import logging
import platform
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .exceptions import OutputExistsError

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
SAMPLES_FILE = "samples.csv"
CDF_FILE = "cdf.csv"
SUMMARY_FILE = "summary.json"
OUTPUT_FILES = (MANIFEST_FILE, SAMPLES_FILE, CDF_FILE, SUMMARY_FILE)
COMPARISON_FILES = (CDF_FILE, SUMMARY_FILE)

SAMPLES_HEADER = ("replication_index", "m_cont", "m_grid", "norm_cont", "norm_grid")
CDF_HEADER = ("x", "y", "empirical", "theoretical", "diff")


def format_float(value):
    """Shortest text that reads back to the same double."""
    return repr(float(value))


def versions():
    return {
        "chigrid": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def summary_dict(report):
    return {
        "sup_distance": report.sup_distance,
        "marginal_ks_cont": report.marginal_ks_cont,
        "marginal_ks_grid": report.marginal_ks_grid,
        "marginal_ks_sphere": report.marginal_ks_sphere,
        "n_rep": report.n_samples,
        "within_tolerance": report.within_tolerance,
        "runtime": report.runtime,
    }


def manifest_dict(report):
    return {
        **report.metadata,
        "versions": versions(),
        "files": list(OUTPUT_FILES),
    }


def _write_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")


def _csv_writer(f):
    return csv.writer(f, lineterminator="\n")


def check_output_directory(directory, files=OUTPUT_FILES, force=False):
    """Refuse to clobber earlier results; the directory itself is not created."""
    directory = Path(directory)
    existing = [name for name in files if (directory / name).exists()]
    if existing and not force:
        raise OutputExistsError(
            "%s already contains %s, pass --force to overwrite"
            % (directory, ", ".join(existing))
        )
    return directory


def _prepare(directory, files, force):
    directory = check_output_directory(directory, files=files, force=force)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write_cdf(path, report):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = _csv_writer(f)
        writer.writerow(CDF_HEADER)
        for (x, y), empirical, theoretical, diff in zip(
            report.eval_points,
            report.empirical,
            report.theoretical,
            report.per_point,
            strict=True,
        ):
            writer.writerow(
                [
                    format_float(x),
                    format_float(y),
                    format_float(empirical),
                    format_float(theoretical),
                    format_float(diff),
                ]
            )


def write_outputs(report, directory, force=False):
    directory = _prepare(directory, OUTPUT_FILES, force)

    with open(directory / SAMPLES_FILE, "w", encoding="utf-8", newline="") as f:
        writer = _csv_writer(f)
        writer.writerow(SAMPLES_HEADER)
        for result in report.results:
            writer.writerow(
                [
                    result.index,
                    format_float(result.pair.m_cont),
                    format_float(result.pair.m_grid),
                    format_float(result.normalized.norm_cont),
                    format_float(result.normalized.norm_grid),
                ]
            )

    _write_cdf(directory / CDF_FILE, report)
    manifest = manifest_dict(report)
    _write_json(directory / MANIFEST_FILE, manifest)
    _write_json(directory / SUMMARY_FILE, summary_dict(report))
    logger.info("Wrote %s to %s", ", ".join(OUTPUT_FILES), directory)
    return manifest


def write_comparison(report, directory, force=False):
    """cdf.csv and summary.json for samples that were simulated elsewhere."""
    directory = _prepare(directory, COMPARISON_FILES, force)
    _write_cdf(directory / CDF_FILE, report)
    _write_json(directory / SUMMARY_FILE, summary_dict(report))
    logger.info("Wrote %s to %s", ", ".join(COMPARISON_FILES), directory)


def read_samples(path):
    """Normalized pairs from a samples.csv, shape (n_rep, 2)."""
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = set(SAMPLES_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError("%s lacks columns %s" % (path, ", ".join(sorted(missing))))
        rows = [(float(row["norm_cont"]), float(row["norm_grid"])) for row in reader]
    return np.asarray(rows, dtype=float).reshape(-1, 2)


def write_paths(path, chi_input, chi, stride):
    """Lattice values of one replication: time, components, chi, grid flag."""
    times = chi.spec.times
    header = ["t"] + ["x%s" % (i + 1) for i in range(chi_input.m)] + ["chi", "on_grid"]
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = _csv_writer(f)
        writer.writerow(header)
        for k, t in enumerate(times):
            writer.writerow(
                [format_float(t)]
                + [format_float(v) for v in chi_input.components[:, k]]
                + [format_float(chi.values[k]), int(k % stride == 0)]
            )


def write_json(path, data, force=False):
    path = Path(path)
    if path.exists() and not force:
        raise OutputExistsError("%s exists, pass --force to overwrite" % path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_json(path, data)
