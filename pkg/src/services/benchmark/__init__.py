# Redundancy benchmark
