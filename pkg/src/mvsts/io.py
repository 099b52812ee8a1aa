"""File formats: CSV with 17-significant-digit floats, JSON configs, and a
deterministic zip container for retained draws.

The draws container is a plain zip of .npy members plus a meta.json with
the bookkeeping fields; member timestamps are fixed so identical draws
produce byte-identical files.
"""

from __future__ import annotations

import io as _io
import json
import zipfile
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .gibbs import McmcDraws
from .statespace import ModelSpec

DRAWS_FORMAT_VERSION = 1
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def format_value(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows):
    """Comma-separated, header row, UTF-8, floats at 17 significant digits."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(str(h) for h in header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
    return path


def write_matrix_csv(path, header, matrix):
    matrix = np.asarray(matrix)
    if len(header) != (matrix.shape[1] if matrix.ndim == 2 else 1):
        raise ValidationError("header length does not match column count")
    return write_csv(path, header, np.atleast_2d(matrix))


def read_numeric_csv(path):
    """Read a headered numeric CSV; returns (header list, float array [n, k])."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty CSV")
    header = lines[0].split(",")
    rows = []
    for ln_no, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ValidationError(f"{path}:{ln_no}: expected {len(header)} fields, found {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValidationError(f"{path}:{ln_no}: {exc}") from None
    data = np.asarray(rows, dtype=float) if rows else np.zeros((0, len(header)))
    return header, data


def write_json(path, obj):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    with Path(path).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def _npy_bytes(arr):
    buf = _io.BytesIO()
    np.save(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


def save_draws(draws: McmcDraws, path, config_echo=None):
    """Persist all draw arrays plus bookkeeping into one deterministic file."""
    path = Path(path)
    meta = {
        "format_version": DRAWS_FORMAT_VERSION,
        "ki": list(draws.ki),
        "ntrain": draws.ntrain,
        "mtrain": draws.mtrain,
        "spec": draws.spec.to_dict(),
        "signal_labels": [list(t) for t in draws.signal_labels],
        "slot_labels": [list(t) for t in draws.slot_labels],
        "seed_info": draws.seed_info,
        "states_retained": draws.States is not None,
        "config_echo": config_echo,
    }
    members = {
        "meta.json": json.dumps(meta, indent=2, sort_keys=True).encode("utf-8"),
        "Ind.npy": _npy_bytes(draws.Ind),
        "beta_hat.npy": _npy_bytes(draws.beta_hat),
        "ob_sig2.npy": _npy_bytes(draws.ob_sig2),
        "st_sig2.npy": _npy_bytes(draws.st_sig2),
        "residuals.npy": _npy_bytes(draws.residuals),
        "final_states.npy": _npy_bytes(draws.final_states),
    }
    if draws.States is not None:
        members["States.npy"] = _npy_bytes(draws.States)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(members):
            info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
            zf.writestr(info, members[name])
    return path


def load_draws(path) -> McmcDraws:
    path = Path(path)
    try:
        with zipfile.ZipFile(path, "r") as zf:
            meta = json.loads(zf.read("meta.json").decode("utf-8"))
            arrays = {}
            for name in zf.namelist():
                if name.endswith(".npy"):
                    arrays[name[:-4]] = np.load(_io.BytesIO(zf.read(name)), allow_pickle=False)
    except (zipfile.BadZipFile, KeyError, OSError) as exc:
        raise ValidationError(f"{path}: not a readable draws file ({exc})") from None
    if meta.get("format_version") != DRAWS_FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported draws format {meta.get('format_version')}")
    return McmcDraws(
        Ind=arrays["Ind"],
        beta_hat=arrays["beta_hat"],
        ob_sig2=arrays["ob_sig2"],
        st_sig2=arrays["st_sig2"],
        States=arrays.get("States"),
        residuals=arrays["residuals"],
        final_states=arrays["final_states"],
        ki=tuple(meta["ki"]),
        ntrain=int(meta["ntrain"]),
        mtrain=int(meta["mtrain"]),
        spec=ModelSpec.from_dict(meta["spec"]),
        signal_labels=tuple((int(s), str(c)) for s, c in meta["signal_labels"]),
        slot_labels=tuple((int(s), str(c)) for s, c in meta["slot_labels"]),
        seed_info=meta.get("seed_info"),
    )


def export_draw_arrays(draws: McmcDraws, out_dir):
    """CSV export of every retained array, for interoperability.

    3-d arrays are flattened long-form with explicit index columns.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    K, keep = draws.K, draws.n_keep
    written.append(write_csv(out_dir / "Ind.csv", ["predictor"] + [f"draw{d}" for d in range(keep)],
                             [[j + 1] + draws.Ind[j].tolist() for j in range(K)]))
    written.append(write_csv(out_dir / "beta_hat.csv", ["predictor"] + [f"draw{d}" for d in range(keep)],
                             [[j + 1] + draws.beta_hat[j].tolist() for j in range(K)]))
    rows = [[i + 1, j + 1] + draws.ob_sig2[i, j].tolist()
            for i in range(draws.mtrain) for j in range(draws.mtrain)]
    written.append(write_csv(out_dir / "ob_sig2.csv",
                             ["row", "col"] + [f"draw{d}" for d in range(keep)], rows))
    rows = [[f"{s + 1}:{name}"] + draws.st_sig2[k].tolist()
            for k, (s, name) in enumerate(draws.slot_labels)]
    written.append(write_csv(out_dir / "st_sig2.csv",
                             ["slot"] + [f"draw{d}" for d in range(keep)], rows))
    if draws.States is not None:
        rows = [[t, s + 1, name] + draws.States[t, q].tolist()
                for q, (s, name) in enumerate(draws.signal_labels)
                for t in range(draws.ntrain)]
        written.append(write_csv(out_dir / "States.csv",
                                 ["t", "series", "component"] + [f"draw{d}" for d in range(keep)], rows))
    return written
