"""CLI scripts for the bridgelab package."""
