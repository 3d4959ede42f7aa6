"""Busy-forbidden readers-writer lock: models, equivalence checkers and a concurrent implementation."""
