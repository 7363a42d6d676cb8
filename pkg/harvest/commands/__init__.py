# harvest/commands/__init__.py
# Keep this empty to avoid circular imports.
# Commands are registered explicitly in harvest/main.py.
