"""Human labeling service: FastAPI app, campaign state, wire schemas."""

from .app import create_app
from .state import Registry, ServiceConfig

__all__ = ["create_app", "Registry", "ServiceConfig"]
