# Constrained variational quantum optimization toolkit
