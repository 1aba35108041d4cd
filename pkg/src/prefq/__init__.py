"""Preference queries: winnow evaluation and semantic optimization."""

from .formula import Domain, Schema, parse_formula
from .relation import Relation, load_csv
from .dependency import Cgd, Fd, entails, fd_to_cgd, check_on_instance
from .preference import PreferenceRelation, is_spo_rel, is_wo_rel
from .engine import winnow_naive, winnow_bnl, winnow_wwo, winnow_wwo_two_pass

__all__ = [
    "Domain", "Schema", "parse_formula", "Relation", "load_csv", "Cgd", "Fd",
    "entails", "fd_to_cgd", "check_on_instance", "PreferenceRelation",
    "is_spo_rel", "is_wo_rel", "winnow_naive", "winnow_bnl", "winnow_wwo",
    "winnow_wwo_two_pass",
]
