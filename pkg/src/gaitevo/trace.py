"""Evaluation traces and their on-disk formats."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .cpg import LEG_NAMES

JOINT_COLUMNS = tuple(f"{leg}_j{j}" for leg in LEG_NAMES for j in range(3))
GRF_COLUMNS = tuple(f"{leg}_grf" for leg in LEG_NAMES)
PHASE_COLUMNS = tuple(f"{leg}_phase" for leg in LEG_NAMES)

#: Column order of ``EvalTrace.to_csv`` (and of the kernels' sample rows).
CSV_COLUMNS = (("time", "x", "y", "z", "qw", "qx", "qy", "qz", "up_angle")
               + JOINT_COLUMNS + GRF_COLUMNS + PHASE_COLUMNS)


@dataclass
class EvalTrace:
    """Uniformly sampled record of one evaluation.

    ``grf`` holds contact-force magnitudes in newtons and ``phases`` the
    unwrapped joint-0 phase of each leg.  If ``fell`` is set, the last sample
    is the termination instant and may fall off the sampling grid.
    """

    time: np.ndarray
    position: np.ndarray
    orientation: np.ndarray
    up_angle: np.ndarray
    joints: np.ndarray
    grf: np.ndarray
    phases: np.ndarray
    duration: float
    fell: bool = False
    dt: float = 0.002
    sample_period: float = 0.01

    @classmethod
    def from_rows(cls, rows, **meta) -> "EvalTrace":
        rows = np.asarray(rows, dtype=float).reshape(-1, len(CSV_COLUMNS))
        return cls(
            time=rows[:, 0].copy(),
            position=rows[:, 1:4].copy(),
            orientation=rows[:, 4:8].copy(),
            up_angle=rows[:, 8].copy(),
            joints=rows[:, 9:21].copy(),
            grf=rows[:, 21:25].copy(),
            phases=rows[:, 25:29].copy(),
            **meta,
        )

    def rows(self) -> np.ndarray:
        return np.column_stack([self.time, self.position, self.orientation, self.up_angle,
                                self.joints, self.grf, self.phases])

    def __len__(self):
        return len(self.time)

    @property
    def start(self) -> np.ndarray:
        return self.position[0]

    @property
    def end(self) -> np.ndarray:
        return self.position[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows():
                writer.writerow([repr(float(v)) for v in row])

    def save(self, path) -> None:
        """Compact binary log (compressed ``.npz``) for replay."""
        np.savez_compressed(
            path, rows=self.rows(), duration=self.duration, fell=self.fell,
            dt=self.dt, sample_period=self.sample_period,
        )

    @classmethod
    def load(cls, path) -> "EvalTrace":
        with np.load(path) as data:
            return cls.from_rows(
                data["rows"], duration=float(data["duration"]), fell=bool(data["fell"]),
                dt=float(data["dt"]), sample_period=float(data["sample_period"]),
            )

    @classmethod
    def from_csv(cls, path, duration=None, fell=False, dt=0.002, sample_period=0.01) -> "EvalTrace":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected trace columns")
            rows = [[float(v) for v in r] for r in reader]
        rows = np.asarray(rows)
        if duration is None:
            duration = float(rows[-1, 0])
        return cls.from_rows(rows, duration=duration, fell=fell, dt=dt, sample_period=sample_period)
