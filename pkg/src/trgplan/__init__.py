"""Terrain-aware global planning on traversal risk graphs."""
