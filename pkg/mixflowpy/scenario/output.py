import csv
import json
import logging
import math
import pathlib
import typing

import numpy as np

from ..types.records import MonitorReport, Snapshot, TimeSeries
from ..utils import format_number
from .. import exception as errs

logger = logging.getLogger(__name__)

__all__ = ('emit_outputs', 'monitor_rows', 'snapshot_rows', 'run_metadata', 'snapshot_filename')

MONITORS_FILE = 'monitors.csv'
RUN_FILE = 'run.json'


def snapshot_filename(step: int) -> str:
    return f"fields_{int(step):06d}.csv"


def monitor_rows(series: TimeSeries, precision: int = 17) -> typing.List[typing.List[str]]:
    """ Header and formatted rows of monitors.csv """
    rows = [list(MonitorReport.COLUMNS)]
    for record in series.records:
        rows.append([format_number(value, precision) for value in record.row()])
    return rows


def snapshot_rows(snapshot: Snapshot, precision: int = 17) -> typing.List[typing.List[str]]:
    """ Header and formatted rows of one field file, one row per cell """
    state = snapshot.state
    n_q = state.q.shape[1]
    n_species = snapshot.rho.shape[1]
    header = (['x', 'varrho'] + [f"q_{ell + 1}" for ell in range(n_q)] + ['zeta', 'v']
              + [f"rho_{i + 1}" for i in range(n_species)] + ['pressure'])

    rows = [header]
    for cell in range(state.n_cells):
        values = [snapshot.x[cell], state.varrho[cell], *state.q[cell], state.zeta[cell], state.v[cell],
                  *snapshot.rho[cell], snapshot.pressure[cell]]
        rows.append([format_number(value, precision) for value in values])
    return rows


def _plain(value):
    """ JSON-safe scalar, non-finite floats written as strings """
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    number = float(value)
    return number if math.isfinite(number) else str(number)


def run_metadata(series: TimeSeries, config, files: typing.Sequence[str]) -> dict:
    """ Content of run.json """
    from .. import __version__

    breach = None if series.breach is None else {key: _plain(value) for key, value in series.breach.items()}
    final_time = series.records[-1].time if series.records else 0.0
    return {
        'version': __version__,
        'config_hash': series.config_hash,
        'config': config.document,
        'termination_reason': series.termination_reason,
        'message': series.message,
        'breach': breach,
        'n_steps': len(series.records) - 1,
        'final_time': final_time,
        'files': list(files)
    }


def _write_csv(path: pathlib.Path, rows) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerows(rows)


def emit_outputs(series: TimeSeries, config, out_dir: typing.Optional[typing.Union[str, pathlib.Path]] = None
                 ) -> typing.List[pathlib.Path]:
    """
    Writes monitors.csv, one fields_<step>.csv per snapshot and run.json

    Numbers are written locale-independently with config.precision significant digits, so the
    same run always produces byte-identical files.

    :param series: Nonempty TimeSeries of a run
    :param config: RunConfig of the run
    :param out_dir: Target directory, config.output_directory by default
    :return: Paths of the written files
    :raises OutputError: If the files could not be written
    """
    if not series.records:
        raise ValueError("emit_outputs needs a series with at least one record")
    directory = pathlib.Path(out_dir if out_dir is not None else config.output_directory)
    precision = config.precision
    written: typing.List[pathlib.Path] = []

    try:
        directory.mkdir(parents=True, exist_ok=True)

        monitors = directory / MONITORS_FILE
        _write_csv(monitors, monitor_rows(series, precision))
        written.append(monitors)

        for snapshot in series.snapshots:
            path = directory / snapshot_filename(snapshot.step)
            _write_csv(path, snapshot_rows(snapshot, precision))
            written.append(path)

        run_file = directory / RUN_FILE
        metadata = run_metadata(series, config, [p.name for p in written])
        with open(run_file, 'w', encoding='utf-8', newline='\n') as file:
            json.dump(metadata, file, sort_keys=True, indent=2, ensure_ascii=True)
            file.write('\n')
        written.append(run_file)

    except OSError as e:
        logger.error(f"[OUTPUT] Failed to write the outputs to {directory}: {e}")
        raise errs.OutputError(f"Failed to write the outputs to {directory}: {e}") from e

    logger.info(f"[OUTPUT] Wrote {len(written)} files to {directory}")
    return written
