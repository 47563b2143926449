"""Dataset containers, CSV I/O, and deterministic train/test index handling.

On-disk format is a single CSV with header
``temperature,<component_1>,...,<component_c>,wn_<v1>,...,wn_<vp>`` where the
wavenumber labels carry up to 6 significant digits and one row per sample.
Data cells are written with full float precision (exact round-trip).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .seeding import make_rng


def _frozen_array(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Spectrum:
    """A single absorbance spectrum on a strictly increasing wavenumber grid (cm^-1)."""

    wavenumbers: np.ndarray
    absorbance: np.ndarray

    def __post_init__(self):
        w = _frozen_array(self.wavenumbers)
        a = _frozen_array(self.absorbance)
        object.__setattr__(self, "wavenumbers", w)
        object.__setattr__(self, "absorbance", a)
        if w.ndim != 1 or w.size < 2:
            raise DataError("wavenumber grid must be 1-D with at least 2 points")
        if not np.all(np.isfinite(w)) or np.any(np.diff(w) <= 0):
            raise DataError("wavenumbers must be finite and strictly increasing")
        if a.shape != w.shape:
            raise DataError(
                f"absorbance length {a.shape} does not match grid length {w.shape}"
            )
        if not np.all(np.isfinite(a)):
            raise DataError("absorbance contains non-finite values")

    @property
    def n_points(self) -> int:
        return int(self.wavenumbers.size)


@dataclass(frozen=True)
class SampleSet:
    """Paired spectra, concentrations (% by mass), and temperatures (deg C).

    All rows share one wavenumber grid. Immutable after construction; the
    arrays are read-only views, so a SampleSet can be shared freely.
    """

    wavenumbers: np.ndarray         # (n_points,)
    absorbance_matrix: np.ndarray   # (n_samples, n_points)
    concentrations: np.ndarray      # (n_samples, n_components), >= 0
    temperatures: np.ndarray        # (n_samples,)
    component_names: tuple[str, ...]

    def __post_init__(self):
        w = _frozen_array(self.wavenumbers)
        x = _frozen_array(self.absorbance_matrix)
        c = _frozen_array(self.concentrations)
        t = _frozen_array(self.temperatures)
        names = tuple(str(n) for n in self.component_names)
        for field, value in (
            ("wavenumbers", w),
            ("absorbance_matrix", x),
            ("concentrations", c),
            ("temperatures", t),
            ("component_names", names),
        ):
            object.__setattr__(self, field, value)
        if w.ndim != 1 or w.size < 1:
            raise DataError("wavenumber grid must be 1-D and non-empty")
        if not np.all(np.isfinite(w)) or np.any(np.diff(w) <= 0):
            raise DataError("wavenumbers must be finite and strictly increasing")
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] != w.size:
            raise DataError(
                f"absorbance matrix shape {x.shape} incompatible with grid of {w.size} points"
            )
        n = x.shape[0]
        if c.ndim != 2 or c.shape[0] != n or c.shape[1] < 1:
            raise DataError(f"concentrations shape {c.shape} incompatible with {n} samples")
        if len(names) != c.shape[1]:
            raise DataError(
                f"{len(names)} component names for {c.shape[1]} concentration columns"
            )
        if t.shape != (n,):
            raise DataError(f"temperatures shape {t.shape} incompatible with {n} samples")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(c)) and np.all(np.isfinite(t))):
            raise DataError("sample set contains non-finite values")
        if np.any(c < 0):
            raise DataError("concentrations must be non-negative")

    @property
    def n_samples(self) -> int:
        return int(self.absorbance_matrix.shape[0])

    @property
    def n_points(self) -> int:
        return int(self.wavenumbers.size)

    @property
    def n_components(self) -> int:
        return int(self.concentrations.shape[1])

    def component_index(self, name: str) -> int:
        try:
            return self.component_names.index(name)
        except ValueError:
            raise DataError(f"unknown component {name!r}; have {self.component_names}") from None

    def row(self, i: int) -> Spectrum:
        return Spectrum(self.wavenumbers, self.absorbance_matrix[i])

    def take(self, indices) -> "SampleSet":
        """Sub-set by row indices, preserving the given order."""
        idx = np.asarray(indices, dtype=int)
        return SampleSet(
            self.wavenumbers,
            self.absorbance_matrix[idx],
            self.concentrations[idx],
            self.temperatures[idx],
            self.component_names,
        )


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips exactly
    return repr(float(x))


def _wn_label(value: float) -> str:
    return f"wn_{float(value):.6g}"


def save_sampleset(sset: SampleSet, path) -> None:
    """Write a SampleSet to CSV; the file re-loads to exactly equal values."""
    for name in sset.component_names:
        if not name or "," in name or name == "temperature" or name.startswith("wn_"):
            raise DataError(f"component name {name!r} cannot be used as a CSV column")
    header = ["temperature", *sset.component_names]
    header += [_wn_label(w) for w in sset.wavenumbers]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(sset.n_samples):
            cells = [_fmt(sset.temperatures[i])]
            cells += [_fmt(v) for v in sset.concentrations[i]]
            cells += [_fmt(v) for v in sset.absorbance_matrix[i]]
            fh.write(",".join(cells) + "\n")


def _parse_cell(raw: str, row: int, column: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"row {row}, column {column!r}: cannot parse {raw!r} as a number") from None
    if not np.isfinite(value):
        raise DataError(f"row {row}, column {column!r}: non-finite value {raw!r}")
    return value


def load_sampleset(path) -> SampleSet:
    """Load a SampleSet from CSV, reporting the row and column of any bad cell."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or header[0] != "temperature":
            raise DataError(f"{path}: header must start with 'temperature'")
        first_wn = next((j for j, h in enumerate(header) if h.startswith("wn_")), len(header))
        component_names = header[1:first_wn]
        wn_labels = header[first_wn:]
        if not component_names:
            raise DataError(f"{path}: no component columns before the wavenumber block")
        if not wn_labels:
            raise DataError(f"{path}: no wn_ columns in header")
        for j, label in enumerate(wn_labels):
            if not label.startswith("wn_"):
                raise DataError(f"{path}: column {first_wn + j + 1} {label!r} is not a wn_ column")
        try:
            wavenumbers = np.array([float(lbl[3:]) for lbl in wn_labels])
        except ValueError:
            raise DataError(f"{path}: malformed wavenumber label in header") from None

        temps, concs, rows = [], [], []
        n_fields = len(header)
        for r, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != n_fields:
                raise DataError(f"row {r}: expected {n_fields} fields, found {len(record)}")
            temps.append(_parse_cell(record[0], r, "temperature"))
            conc_row = []
            for j, name in enumerate(component_names):
                value = _parse_cell(record[1 + j], r, name)
                if value < 0:
                    raise DataError(f"row {r}, column {name!r}: negative concentration {value}")
                conc_row.append(value)
            concs.append(conc_row)
            rows.append([_parse_cell(record[first_wn + j], r, wn_labels[j])
                         for j in range(len(wn_labels))])
        if not rows:
            raise DataError(f"{path}: no data rows")
    return SampleSet(wavenumbers, np.array(rows), np.array(concs), np.array(temps),
                     tuple(component_names))


def select_range(sset: SampleSet, lo: float, hi: float) -> SampleSet:
    """Keep exactly the grid points p with lo <= p <= hi."""
    if not lo < hi:
        raise ValueError(f"range lo ({lo}) must be below hi ({hi})")
    mask = (sset.wavenumbers >= lo) & (sset.wavenumbers <= hi)
    if not np.any(mask):
        raise DataError(f"no grid points inside [{lo}, {hi}]")
    return SampleSet(
        sset.wavenumbers[mask],
        sset.absorbance_matrix[:, mask],
        sset.concentrations,
        sset.temperatures,
        sset.component_names,
    )


def split_indices(n: int, n_train: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw n_train distinct training indices uniformly; test is the complement.

    Both index sets are returned sorted ascending and are a pure function of
    (n, n_train, seed).
    """
    if not 1 <= n_train < n:
        raise ValueError(f"n_train must satisfy 1 <= n_train < n, got n_train={n_train}, n={n}")
    rng = make_rng(seed)
    train = np.sort(rng.choice(n, size=n_train, replace=False))
    test = np.setdiff1d(np.arange(n), train)
    return train, test


def grow_train(train, test, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Move k distinct uniformly chosen test indices into the training set.

    Existing training members are always retained; output sets are sorted.
    """
    train = np.asarray(train, dtype=int)
    test = np.asarray(test, dtype=int)
    if k > test.size:
        raise ValueError(f"cannot move {k} samples from a test set of {test.size}")
    if k == 0:
        return np.sort(train), np.sort(test)
    rng = make_rng(seed)
    moved = rng.choice(test, size=k, replace=False)
    new_train = np.sort(np.concatenate([train, moved]))
    new_test = np.setdiff1d(test, moved)
    return new_train, new_test
