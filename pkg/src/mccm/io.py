"""File formats: model JSON, newline-delimited choice tables, reports, plans.

Floats are written with 17 significant digits so every file round-trips
bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

from mccm.errors import DomainError
from mccm.model import Assortment, ModelParams
from mccm.oracle import ChoiceTable
from mccm.plan import RecoveryPlan, count_required


def _num(x: float) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise DomainError(f"cannot serialize non-finite number {x}")
    return format(x, ".17g")


def dumps(obj) -> str:
    """Compact JSON with full-precision floats."""
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "null"
        return _num(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if hasattr(obj, "tolist"):
        return dumps(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def encode_model(model: ModelParams) -> str:
    rows = ",\n  ".join(dumps(row) for row in model.rho.tolist())
    return (
        "{\n"
        f' "n": {model.n},\n'
        f' "lambda": {dumps(model.lam.tolist())},\n'
        f' "rho": [\n  {rows}\n ]\n'
        "}\n"
    )


def decode_model(text: str, renormalize: bool = False) -> ModelParams:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"model file is not valid JSON: {exc}") from exc
    return ModelParams.from_dict(data, renormalize=renormalize)


def model_hash(model: ModelParams) -> str:
    return hashlib.sha256(encode_model(model).encode("utf-8")).hexdigest()


def write_model(path, model: ModelParams) -> None:
    Path(path).write_text(encode_model(model), encoding="utf-8")


def read_model(path, renormalize: bool = False) -> ModelParams:
    return decode_model(Path(path).read_text(encoding="utf-8"), renormalize)


def encode_table(table: ChoiceTable) -> str:
    lines = []
    for S in table:  # iteration order is (|S|, lexicographic)
        vec = table[S]
        pi = {str(j): float(p) for j, p in zip(S.outcomes, vec)}
        lines.append(dumps({"S": list(S.products), "pi": pi}))
    return "".join(line + "\n" for line in lines)


def decode_table(text: str, n: int | None = None) -> ChoiceTable:
    """Parse a choice-table file; ``n`` defaults to the largest product seen."""
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            S = Assortment(rec["S"])
            pi = rec["pi"]
            vec = [float(pi[str(j)]) for j in S.outcomes]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"bad choice-table record on line {lineno}: {exc}") from exc
        if set(pi) != {str(j) for j in S.outcomes}:
            raise DomainError(f"line {lineno}: outcomes {sorted(pi)} do not match S_+")
        records.append((S, vec))
    if n is None:
        n = max((S.products[-1] for S, _ in records), default=0)
    table = ChoiceTable(n)
    for S, vec in records:
        if S in table:
            raise DomainError(f"duplicate record for {list(S)}")
        table[S] = vec
    return table


def write_table(path, table: ChoiceTable) -> None:
    Path(path).write_text(encode_table(table), encoding="utf-8")


def read_table(path, n: int | None = None) -> ChoiceTable:
    return decode_table(Path(path).read_text(encoding="utf-8"), n)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


def encode_plan(plan: RecoveryPlan) -> str:
    c_r, c_r1 = count_required(plan)
    header = (
        f"# n={plan.n} r={plan.r} mode={plan.mode} "
        f"count_r={c_r} count_r_plus_1={c_r1} total={c_r + c_r1}\n"
    )
    return header + "".join(dumps(list(S.products)) + "\n" for S in plan.required_assortments)
