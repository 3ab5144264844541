"""Bundled fixtures: the case-study SI fault trees, SSIM and parameter table."""
from importlib import resources

from fvkit.ftree import FaultTree, parse_fault_tree


def read_text(name: str) -> str:
    return resources.files("fvkit").joinpath("data", name).read_text(encoding="utf-8")


def path(name: str):
    return resources.files("fvkit").joinpath("data", name)


def si_tree() -> FaultTree:
    """SI system with the case-study point probabilities."""
    return parse_fault_tree(read_text("si.ft"))


def si_params_tree() -> FaultTree:
    """SI system with rate/repair/beta parameters from the initial-parameter table."""
    return parse_fault_tree(read_text("si_params.ft"))


def si_ssim_text() -> str:
    return read_text("si_ssim.csv")


# designation order N1..N6 used in the expert survey
SI_DESIGNATIONS = ("SI-P2-DF", "SI-P1-RF", "SI-P2-RF", "CCF-SI-RF2-ALL", "BUS-A-UN", "BUS-B-UN")
