"""Self-healing pipeline for MendLang workspaces: detect, diagnose, repair, verify."""

__version__ = "0.1.0"
