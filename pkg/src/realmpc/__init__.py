"""Secure multi-party computation over real numbers with a trusted dealer."""
from .catalog import execute, oracle, protocol_ids
from .cost import audit, predict
from .dealer import Dealer, DealerBundle, deal
from .errors import (CatalogError, ConfigurationError, DomainError, ModelError, PlanError, ProtocolAbort,
                     RealMPCError, ReconstructionError)
from .shares import DEFAULT_DOMAIN, ShareDomain, reconstruct_additive, reconstruct_multiplicative
from .simnet import Session, Transcript

__all__ = [
    "execute", "oracle", "protocol_ids", "audit", "predict", "Dealer", "DealerBundle", "deal",
    "CatalogError", "ConfigurationError", "DomainError", "ModelError", "PlanError", "ProtocolAbort",
    "RealMPCError", "ReconstructionError", "DEFAULT_DOMAIN", "ShareDomain", "reconstruct_additive",
    "reconstruct_multiplicative", "Session", "Transcript",
]
