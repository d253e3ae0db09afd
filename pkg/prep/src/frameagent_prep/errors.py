class PrepError(RuntimeError):
    """Anything that stops a bundle from being produced."""
