# Model provider gateway
