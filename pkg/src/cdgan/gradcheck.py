"""Central finite-difference verification of parameter gradients.

The checker treats the loss as a black-box function of the parameters:
each scalar entry is perturbed by +/- h and the loss re-evaluated, which
keeps the oracle independent of the autograd path it is checking. The
optimizer's gradients are trusted only because they pass this check on
small double-precision instances.
"""

import torch


def finite_difference_grads(loss_fn, parameters, h: float = 1e-5):
    """Central-difference gradient of ``loss_fn()`` for every parameter.

    ``loss_fn`` must be deterministic (any internal randomness reseeded
    per call). Returns one tensor per parameter, matching its shape.
    """
    grads = []
    with torch.no_grad():
        for p in parameters:
            grad = torch.zeros_like(p)
            flat = p.view(-1)
            gflat = grad.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + h
                plus = float(loss_fn())
                flat[i] = orig - h
                minus = float(loss_fn())
                flat[i] = orig
                gflat[i] = (plus - minus) / (2.0 * h)
            grads.append(grad)
    return grads


def max_relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    """Worst-case elementwise relative error between two gradient sets.

    The denominator is floored so that pairs of near-zero entries (e.g.
    gradients through a saturated path) do not register as spurious
    disagreement.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        diff = (a - n).abs()
        scale = torch.maximum(a.abs(), n.abs()).clamp_min(floor)
        worst = max(worst, float((diff / scale).max()))
    return worst


def check_gradients(loss_fn, parameters, h: float = 1e-5, tol: float = 1e-3) -> float:
    """Compare autograd against finite differences; return the worst
    relative error. Raises AssertionError above ``tol``."""
    parameters = list(parameters)
    for p in parameters:
        if p.grad is not None:
            p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = [p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p) for p in parameters]
    numeric = finite_difference_grads(lambda: loss_fn().detach(), parameters, h=h)
    err = max_relative_error(analytic, numeric)
    if err > tol:
        raise AssertionError(f"gradient check failed: max relative error {err:.3e} > {tol:.1e}")
    return err
