# Evaluation harness
