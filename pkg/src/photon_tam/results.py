"""CSV and JSON writers for distribution tables and cumulant records.

CSV files start with ``# key: <json>`` comment lines (effective config and
table metadata) followed by a header row.  Floats are written with ``repr``
so identical inputs give byte-identical files.
"""

import csv
import io
import json
import math

import numpy as np

TABLE_SCHEMA = "photon-tam-distribution/1"
SWEEP_SCHEMA = "photon-tam-sweep/1"


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else repr(obj)
    return obj


def _dump(obj):
    return json.dumps(jsonable(obj), sort_keys=True)


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(comments, header, rows):
    buf = io.StringIO()
    for key, value in comments.items():
        buf.write(f"# {key}: {_dump(value)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


TABLE_HEADERS = {
    "DiscretePair": ["observable", "a", "m", "m_s", "probability"],
    "Discrete": ["observable", "a", "outcome", "probability"],
    "Binned": ["observable", "a", "bin_low", "bin_high", "probability"],
}


def table_to_csv(table, a, config=None):
    rows = [(table.observable, float(a)) + tuple(r) for r in table.rows()]
    comments = {"schema": TABLE_SCHEMA, "config": config or {}, "metadata": table.metadata}
    return _csv_text(comments, TABLE_HEADERS[table.kind], rows)


def _table_dict(table):
    out = {
        "kind": table.kind,
        "observable": table.observable,
        "columns": TABLE_HEADERS[table.kind][2:],
        "rows": [list(r) for r in table.rows()],
        "total_mass": table.total_mass(),
    }
    if table.kind != "DiscretePair":
        out["mean"] = table.mean()
        out["variance"] = table.variance()
    if table.sub_tables:
        out["sub_tables"] = {str(k): _table_dict(v) for k, v in table.sub_tables.items()}
    return out


def table_to_json(table, a, config=None):
    payload = {"schema": TABLE_SCHEMA, "a": float(a), "config": config or {},
               "metadata": table.metadata, "table": _table_dict(table)}
    return json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n"


RECORD_HEADER = ["observable", "a", "mean", "variance", "mode", "status", "f_a"]


def records_to_csv(records, f_values, config=None):
    rows = [(r.observable, float(r.a), float(r.mean), float(r.variance), r.mode, r.status, f_values[r.a])
            for r in records]
    return _csv_text({"schema": SWEEP_SCHEMA, "config": config or {}}, RECORD_HEADER, rows)


def records_to_json(records, f_values, config=None):
    rows = [dict(zip(RECORD_HEADER, (r.observable, r.a, r.mean, r.variance, r.mode, r.status, f_values[r.a])))
            for r in records]
    payload = {"schema": SWEEP_SCHEMA, "config": config or {}, "records": rows}
    return json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n"


def read_csv_comments(text):
    """Parse the leading ``# key: json`` lines back into a dict."""
    out = {}
    for line in text.splitlines():
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(": ")
        out[key] = json.loads(value)
    return out
