"""Independent reference implementations used as test oracles.

Plain Python with the math module only, written directly from the
decision-theoretic definitions and sharing no code with the package.
"""

import math

# action codes: 0 positive diagnosis, 1 negative diagnosis, 2 defer


def loss(cost, action, state):
    c_fp, c_fn, c_defer = cost
    if action == 2:
        return c_defer
    if action == 0:
        return c_fp if state == 0 else 0.0
    return c_fn if state == 1 else 0.0


def expected(cost, p):
    return [p * loss(cost, a, 1) + (1 - p) * loss(cost, a, 0) for a in range(3)]


def best(cost, p):
    losses = expected(cost, p)
    return min(range(3), key=lambda a: (losses[a], a))


def probabilities(cost, p, beta=1.0):
    losses = expected(cost, p)
    weights = [math.exp(-(x - min(losses)) / beta) for x in losses]
    total = sum(weights)
    return [w / total for w in weights]


def loglik(cost, beliefs, actions, beta=1.0):
    total = 0.0
    for p, a in zip(beliefs, actions):
        losses = expected(cost, p)
        m = min(losses)
        log_norm = math.log(sum(math.exp(-(x - m) / beta) for x in losses))
        total += -(losses[a] - m) / beta - log_norm
    return total


def central_gradient(cost, beliefs, actions, step=1e-5, beta=1.0):
    grad = []
    for j in range(3):
        up, down = list(cost), list(cost)
        up[j] += step
        down[j] -= step
        grad.append((loglik(up, beliefs, actions, beta) - loglik(down, beliefs, actions, beta)) / (2 * step))
    return grad


def benchmark_loss(cost, actions, states):
    return sum(loss(cost, a, s) for a, s in zip(actions, states))


def pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def progress(baseline, steered, target):
    b = math.log2(baseline / target)
    l = math.log2(steered / target)  # noqa: E741
    return (1 if b > 0 else -1) * (b - l) / abs(b)
