# Shared pipeline utilities
