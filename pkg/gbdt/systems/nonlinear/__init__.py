# Explicit solutions of integrable nonlinear equations
