# Test package for FastAPI Microservices
