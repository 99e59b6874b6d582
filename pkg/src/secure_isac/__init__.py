"""Secure cell-free ISAC beamforming: CRB-optimal transmit and artificial-noise design."""

from .scenario import Scenario, ScenarioConfig, build_scenario, load_config, two_ap_config
from .sigmodel import BeamformerSet, LiftedVariables
from .fim import FimOperator, assemble_fim_operator, crb_theta
from .sdp import build_problem, solve
from .extract import characterize_an, extract_beamformers, verify_tightness

__all__ = [
    "Scenario", "ScenarioConfig", "build_scenario", "load_config", "two_ap_config",
    "BeamformerSet", "LiftedVariables", "FimOperator", "assemble_fim_operator", "crb_theta",
    "build_problem", "solve", "characterize_an", "extract_beamformers", "verify_tightness",
]
