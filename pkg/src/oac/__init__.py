from importlib.metadata import version as _v
try:
    __version__ = _v("artifact")
except Exception:  # pragma: no cover
    __version__ = "0.0.0"
