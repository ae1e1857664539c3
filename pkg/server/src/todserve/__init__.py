from .app import RunningServer, serve
from .config import ConfigError, ServerConfig
from .models import ModelError, ModelLoadError

__all__ = [
    "ConfigError",
    "ModelError",
    "ModelLoadError",
    "RunningServer",
    "ServerConfig",
    "serve",
]

__version__ = "0.1.0"
