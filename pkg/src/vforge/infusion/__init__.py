"""Weak-supervision learning core: label model, classifier, matching."""
