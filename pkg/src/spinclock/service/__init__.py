from .app import create_app
from .models import RunResult
from .runners import execute

__all__ = ["create_app", "execute", "RunResult"]
