"""Sample annotation, human review sessions, config compilation and execution."""
