"""Multi-modal neural code editing on a small Java-like language, from scratch."""
__version__ = "0.1.0"
