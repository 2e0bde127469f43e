"""
Result Exporter

Writes samples, estimates, rate tables and verdicts. Every file is
byte-deterministic: no timestamps, sorted JSON keys, full-precision floats
and LF line endings.
"""

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..analysis.basis import evaluate_function
from ..analysis.estimator import EstimateResult
from ..analysis.model import Sample
from .exceptions import DimensionError

SCHEMA_VERSION = "1.0"
FLOAT_FORMAT = "%.17g"
CURVE_POINTS = 512


class ExportFormat(Enum):
    """Optional plot artifacts; CSV and JSON are always written"""
    DAT = "dat"
    GNUPLOT = "gnuplot"


def _jsonable(obj: Any) -> Any:
    """Convert numpy scalars, arrays, enums and paths; non-finite floats become null"""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


class DataExporter:
    """Result export system for one output directory"""

    def __init__(self, output_dir: Union[str, Path]):
        """Initialize data exporter"""
        self.logger = logging.getLogger(__name__)
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, filename: str) -> Path:
        return self.output_dir / filename

    def write_json(self, payload: Dict[str, Any], filename: str) -> Path:
        """JSON with schema_version, sorted keys and a trailing newline"""
        path = self._path(filename)
        data = dict(payload)
        data['schema_version'] = SCHEMA_VERSION
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(_jsonable(data), f, indent=2, sort_keys=True, allow_nan=False)
            f.write("\n")
        self.logger.info(f"Wrote {path}")
        return path

    def write_csv(self, frame: pd.DataFrame, filename: str) -> Path:
        """Comma separated, header row, %.17g floats, LF endings"""
        path = self._path(filename)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n",
                     encoding='utf-8')
        self.logger.info(f"Wrote {path}")
        return path

    # Samples

    def export_sample(self, sample: Sample, config: Dict[str, Any],
                      stem: str = "sample") -> Dict[str, Path]:
        """One row per observation (y, x_1..x_J) plus a JSON sidecar"""
        columns = {'y': sample.y}
        for j in range(sample.truncation):
            columns[f"x_{j + 1}"] = sample.x[:, j]
        csv_path = self.write_csv(pd.DataFrame(columns), f"{stem}.csv")
        sidecar = self.write_json({
            'kind': 'sample',
            'config': config,
            'seed': sample.seed,
            'n': sample.n,
            'truncation': sample.truncation,
            'process': sample.spec,
            'data_file': csv_path.name,
        }, f"{stem}.json")
        return {'csv': csv_path, 'json': sidecar}

    @staticmethod
    def read_sample(filepath: Union[str, Path]) -> Sample:
        """Load a sample CSV written by export_sample"""
        frame = pd.read_csv(filepath, float_precision="round_trip")
        if 'y' not in frame.columns:
            raise DimensionError(f"{filepath} has no 'y' column")
        x_cols = [c for c in frame.columns if c.startswith("x_")]
        x_cols.sort(key=lambda c: int(c.split("_", 1)[1]))
        if not x_cols:
            raise DimensionError(f"{filepath} has no regressor columns")
        return Sample(y=frame['y'].to_numpy(dtype=float), x=frame[x_cols].to_numpy(dtype=float))

    # Estimates

    def export_estimate(self, result: EstimateResult, config: Dict[str, Any],
                        extra: Optional[Dict[str, Any]] = None,
                        stem: str = "estimate") -> Dict[str, Path]:
        """Estimate JSON and a (t, beta_hat(t)) curve on 512 equispaced points"""
        payload = {'kind': 'estimate', 'config': config, 'estimate': result.to_dict()}
        if extra:
            payload.update(extra)
        json_path = self.write_json(payload, f"{stem}.json")

        t = np.linspace(0.0, 1.0, CURVE_POINTS)
        curve = pd.DataFrame({'t': t, 'beta_hat': evaluate_function(result.beta_hat, t)})
        curve_path = self.write_csv(curve, f"{stem}_curve.csv")
        return {'json': json_path, 'curve': curve_path}

    # Rate experiments

    RATE_COLUMNS = ["n", "m", "gamma", "m_star", "mean_risk", "std_error", "omega_freq",
                    "theory_exponent", "fitted_slope"]

    def export_rates(self, rows: Sequence[Dict[str, Any]], stem: str = "rates") -> Path:
        """Rate comparison table"""
        frame = pd.DataFrame(list(rows), columns=self.RATE_COLUMNS)
        return self.write_csv(frame, f"{stem}.csv")

    def export_risks(self, per_n: Dict[int, List[float]], stem: str = "risks") -> Path:
        """Per-replication risks in long format (n, replication, risk)"""
        records = [(n, r, risk) for n, risks in per_n.items() for r, risk in enumerate(risks)]
        frame = pd.DataFrame(records, columns=["n", "replication", "risk"])
        return self.write_csv(frame, f"{stem}.csv")

    def export_dat(self, x: Sequence[float], y: Sequence[float], header: Sequence[str],
                   filename: str) -> Path:
        """Whitespace separated two-column data for gnuplot"""
        path = self._path(filename)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(f"# {header[0]} {header[1]}\n")
            for xi, yi in zip(x, y):
                f.write(f"{FLOAT_FORMAT % xi} {FLOAT_FORMAT % yi}\n")
        self.logger.info(f"Wrote {path}")
        return path

    def export_gnuplot(self, dat_name: str, xlabel: str, title: str, fitted_slope: float,
                       intercept: float, theory_slope: float, theory_intercept: float,
                       filename: str) -> Path:
        """Template script plotting the data with the fitted and theoretical lines"""
        path = self._path(filename)
        script = "\n".join([
            f"# gnuplot script for {dat_name}",
            "set terminal pngcairo size 800,600",
            f"set output '{Path(filename).stem}.png'",
            f"set title '{title}'",
            f"set xlabel '{xlabel}'",
            "set ylabel 'log risk'",
            "set key left bottom",
            f"fit_slope = {FLOAT_FORMAT % fitted_slope}",
            f"fit_intercept = {FLOAT_FORMAT % intercept}",
            f"theory_slope = {FLOAT_FORMAT % theory_slope}",
            f"theory_intercept = {FLOAT_FORMAT % theory_intercept}",
            f"plot '{dat_name}' using 1:2 with points pt 7 title 'empirical', \\",
            "     fit_intercept + fit_slope * x with lines title sprintf('fit %.3f', fit_slope), \\",
            "     theory_intercept + theory_slope * x with lines dt 2 title sprintf('theory %.3f', theory_slope)",
            "",
        ])
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(script)
        self.logger.info(f"Wrote {path}")
        return path
