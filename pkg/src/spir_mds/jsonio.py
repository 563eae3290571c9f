"""Canonical JSON schemas for configs, transcripts, reports, and shares.

Every document is a JSON object with sorted keys, two-space indentation,
a trailing newline, and a top-level ``schema_version``.  Field elements
are plain integers; exact rationals are ``{"num": ..., "den": ...}``.
Identical inputs therefore serialize to byte-identical files.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Union

import numpy as np

from .audit import AuditReport, IndependenceCheck
from .protocol import AnswerSet, QuerySet, Transcript
from .rates import RateReport
from .storage import Database, GeneratorMatrix, NodeData, StorageParams
from .fields import FieldMatrix, PrimeField

SCHEMA_VERSION = 1


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_document(path: Union[str, Path], obj: dict):
    Path(path).write_text(canonical_dumps(obj))


def read_document(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text())


def fraction_to_json(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator}


def fraction_from_json(obj: dict) -> Fraction:
    return Fraction(obj["num"], obj["den"])


def _int_list(arr: np.ndarray) -> list:
    return np.asarray(arr).tolist()


def params_to_json(p: StorageParams) -> dict:
    return {"q": p.q, "n": p.n, "m": p.m, "k": p.k, "stripes": p.stripes}


def params_from_json(obj: dict) -> StorageParams:
    return StorageParams(
        q=obj["q"], n=obj["n"], m=obj["m"], k=obj["k"], stripes=obj.get("stripes", 1)
    )


def generator_to_json(g: GeneratorMatrix) -> dict:
    return {"q": g.q, "rows": _int_list(g.matrix.array)}


def generator_from_json(obj: dict) -> GeneratorMatrix:
    return GeneratorMatrix(FieldMatrix(PrimeField(obj["q"]), obj["rows"]))


def database_to_json(db: Database) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "database",
        "params": params_to_json(db.params),
        "files": _int_list(db.files),
    }


def database_from_json(obj: dict) -> Database:
    params = params_from_json(obj["params"])
    return Database(params, np.array(obj["files"], dtype=np.int64))


def shares_to_json(params: StorageParams, shares, g: GeneratorMatrix) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "node_shares",
        "params": params_to_json(params),
        "generator": generator_to_json(g),
        "nodes": [
            {"node_index": nd.node_index, "values": _int_list(nd.values)} for nd in shares
        ],
    }


def shares_from_json(obj: dict):
    params = params_from_json(obj["params"])
    g = generator_from_json(obj["generator"])
    shares = [
        NodeData(node["node_index"], np.array(node["values"], dtype=np.int64))
        for node in obj["nodes"]
    ]
    return params, shares, g


def query_set_to_json(qs: QuerySet) -> dict:
    return {
        "theta": qs.theta,
        "masks": _int_list(qs.u),
        "per_node": _int_list(qs.per_node),
    }


def answer_set_to_json(ans: AnswerSet) -> dict:
    return {"per_node": _int_list(ans.per_node)}


def transcript_to_json(tr: Transcript) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "transcript",
        "params": params_to_json(tr.params),
        "generator": generator_to_json(tr.generator),
        "theta": tr.theta,
        "queries": query_set_to_json(tr.query_set),
        "answers": answer_set_to_json(tr.answer_set),
        "decoded_file": _int_list(tr.decoded_file),
        "download_count": tr.download_count,
        "randomness_count": tr.randomness_count,
    }


def rate_report_to_json(report: RateReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "rate_report",
        "achieved_rate": fraction_to_json(report.achieved_rate),
        "capacity": fraction_to_json(report.capacity),
        "achieved_secrecy": fraction_to_json(report.achieved_secrecy),
        "secrecy_floor": fraction_to_json(report.secrecy_floor),
        "at_capacity": report.at_capacity,
    }


def check_to_json(check: IndependenceCheck) -> dict:
    out = {
        "name": check.name,
        "independent": check.independent,
        "mode": "exact" if check.exact else "statistical",
        "universe_size": check.universe_size,
    }
    if check.witness is not None:
        out["witness"] = check.witness
    if check.conditional_equal is not None:
        out["conditional_equal"] = check.conditional_equal
    if check.p_value is not None:
        out["p_value"] = check.p_value
    return out


def audit_report_to_json(report: AuditReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "audit_report",
        "params": params_to_json(report.params),
        "randomness_mode": report.randomness_mode,
        "all_passed": report.all_passed,
        "checks": [check_to_json(c) for c in report.checks],
    }
