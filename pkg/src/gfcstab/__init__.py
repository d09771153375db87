"""Stability certificates and simulation for grids with grid-forming converters under dc-side current limits."""
