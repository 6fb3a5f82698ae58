"""Desk-scale water-treatment testbed: plant, PLCs, attacks and scenarios."""
