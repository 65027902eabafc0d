"""Entanglement-based cloned-SIM detection: simulator, protocols and CLI."""

from . import auth_gsm, proto_qmem, proto_tri, qstate, runtime

__version__ = "0.1.0"

__all__ = ["auth_gsm", "proto_qmem", "proto_tri", "qstate", "runtime", "__version__"]
