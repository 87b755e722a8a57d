"""datadock: a self-hosted research data hub.

A single server process exposing a REST API for uploading, organizing,
discovering, reviewing, and discussing datasets, with organization-scoped
visibility and in-app notifications.
"""

__version__ = "0.1.0"

from .backend import Backend
from .config import ServerConfig

__all__ = ["Backend", "ServerConfig", "__version__"]
