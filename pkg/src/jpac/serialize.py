"""JSON persistence for instances, sample sets, and admission outcomes.

Documents carry a ``format`` tag so files are self-describing and future
layout changes can stay backward compatible.  Writing is deterministic
(sorted keys, fixed separators, trailing newline): serializing the same
object twice yields byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from .deflation import AdmissionOutcome, RoundStats
from .network import GainSampleSet, NetworkInstance
from .powerctl import TwoTimescaleReport
from .rng import SeedRecord

INSTANCE_FORMAT = "jpac.instance/v1"
SAMPLES_FORMAT = "jpac.samples/v1"
OUTCOME_FORMAT = "jpac.outcome/v1"
REPORT_FORMAT = "jpac.validation/v1"


def _opt(arr):
    return None if arr is None else np.asarray(arr).tolist()


def write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _expect_format(doc: dict, tag: str) -> None:
    got = doc.get("format")
    if got != tag:
        raise ValueError(f"expected a {tag} document, got {got!r}")


def instance_to_dict(inst: NetworkInstance) -> dict:
    return {
        "format": INSTANCE_FORMAT,
        "K": inst.K,
        "gamma": inst.gamma.tolist(),
        "eta": inst.eta.tolist(),
        "pbar": inst.pbar.tolist(),
        "kappa": inst.kappa,
        "dist": _opt(inst.dist),
        "tx_pos": _opt(inst.tx_pos),
        "rx_pos": _opt(inst.rx_pos),
    }


def instance_from_dict(doc: dict) -> NetworkInstance:
    _expect_format(doc, INSTANCE_FORMAT)
    return NetworkInstance(
        K=int(doc["K"]),
        gamma=np.asarray(doc["gamma"], dtype=float),
        eta=np.asarray(doc["eta"], dtype=float),
        pbar=np.asarray(doc["pbar"], dtype=float),
        kappa=float(doc["kappa"]),
        dist=None if doc.get("dist") is None else np.asarray(doc["dist"], dtype=float),
        tx_pos=None if doc.get("tx_pos") is None else np.asarray(doc["tx_pos"], dtype=float),
        rx_pos=None if doc.get("rx_pos") is None else np.asarray(doc["rx_pos"], dtype=float),
    )


def samples_to_dict(samples: GainSampleSet) -> dict:
    return {
        "format": SAMPLES_FORMAT,
        "N": samples.N,
        "gains": samples.gains.tolist(),
        "seed": samples.seed.to_json(),
    }


def samples_from_dict(doc: dict) -> GainSampleSet:
    _expect_format(doc, SAMPLES_FORMAT)
    return GainSampleSet(
        N=int(doc["N"]),
        gains=np.asarray(doc["gains"], dtype=float),
        seed=SeedRecord.from_json(doc["seed"]),
    )


def outcome_to_dict(out: AdmissionOutcome) -> dict:
    return {
        "format": OUTCOME_FORMAT,
        "mode": out.mode,
        "support": out.support.tolist(),
        "removal_order": list(out.removal_order),
        "readmitted": list(out.readmitted),
        "n_solves": out.n_solves,
        "rounds": [dataclasses.asdict(r) for r in out.rounds],
        "q_const": _opt(out.q_const),
        "p_const": _opt(out.p_const),
    }


def outcome_from_dict(doc: dict) -> AdmissionOutcome:
    _expect_format(doc, OUTCOME_FORMAT)
    return AdmissionOutcome(
        support=np.asarray(doc["support"], dtype=np.intp),
        removal_order=tuple(int(k) for k in doc["removal_order"]),
        readmitted=tuple(int(k) for k in doc["readmitted"]),
        mode=doc["mode"],
        n_solves=int(doc["n_solves"]),
        rounds=tuple(RoundStats(**r) for r in doc["rounds"]),
        q_const=None if doc.get("q_const") is None else np.asarray(doc["q_const"], dtype=float),
        p_const=None if doc.get("p_const") is None else np.asarray(doc["p_const"], dtype=float),
    )


def report_to_dict(rep: TwoTimescaleReport) -> dict:
    doc = dataclasses.asdict(rep)
    doc["support"] = list(rep.support)
    doc["format"] = REPORT_FORMAT
    return doc
