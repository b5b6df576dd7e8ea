"""Small fully connected Q-network on raw numpy, with Adam.

Architecture: input -> 128 -> 64 -> num_actions, ReLU hidden activations,
linear output head.  Everything is kept as plain arrays so checkpoints are a
single .npz and training is bit-reproducible from a seed.
"""

from __future__ import annotations

import numpy as np


class MLP:
    def __init__(self, sizes, rng):
        """He-initialized weights; ``sizes`` includes input and output widths."""
        self.sizes = list(sizes)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    def forward(self, x):
        h = np.atleast_2d(np.asarray(x, dtype=float))
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        return h @ self.weights[-1] + self.biases[-1]

    def forward_cached(self, x):
        """Forward pass keeping pre-activation caches for backprop."""
        h = np.atleast_2d(np.asarray(x, dtype=float))
        acts = [h]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
            acts.append(h)
        out = h @ self.weights[-1] + self.biases[-1]
        return out, acts

    def backward(self, acts, dout):
        """Gradients of a scalar loss given d(loss)/d(output)."""
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        delta = dout
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w[i] = acts[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        return grads_w, grads_b

    def params(self):
        return self.weights + self.biases

    def copy_from(self, other):
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]

    def clone(self):
        dup = MLP.__new__(MLP)
        dup.sizes = list(self.sizes)
        dup.copy_from(self)
        return dup


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def td_loss_and_grads(net: MLP, states, actions, targets):
    """Mean squared TD error on the taken actions; returns (loss, grads)."""
    q, acts = net.forward_cached(states)
    n = len(actions)
    picked = q[np.arange(n), actions]
    err = picked - targets
    loss = 0.5 * float(np.mean(err ** 2))
    dout = np.zeros_like(q)
    dout[np.arange(n), actions] = err / n
    grads_w, grads_b = net.backward(acts, dout)
    return loss, grads_w + grads_b


def _pack_rng(rng):
    """PCG64 generator state as a flat uint64 array."""
    st = rng.bit_generator.state
    def split128(x):
        return [x & 0xFFFFFFFFFFFFFFFF, (x >> 64) & 0xFFFFFFFFFFFFFFFF]
    vals = (split128(st["state"]["state"]) + split128(st["state"]["inc"])
            + [int(st["has_uint32"]), int(st["uinteger"])])
    return np.array(vals, dtype=np.uint64)


def _unpack_rng(arr):
    arr = [int(v) for v in arr]
    rng = np.random.default_rng(0)
    rng.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": arr[0] | (arr[1] << 64), "inc": arr[2] | (arr[3] << 64)},
        "has_uint32": arr[4], "uinteger": arr[5]}
    return rng


def save_checkpoint(path, net: MLP, target: MLP = None, adam: Adam = None,
                    rng=None, extra=None):
    """Everything needed for bit-identical training continuation."""
    arrays = dict(extra or {})
    if adam is not None:
        arrays["adam_t"] = np.array(adam.t)
        for i, (m, v) in enumerate(zip(adam.m, adam.v)):
            arrays[f"adam_m{i}"] = m
            arrays[f"adam_v{i}"] = v
    if rng is not None:
        arrays["rng_state"] = _pack_rng(rng)
    save_weights(path, net, target, extra=arrays)


def load_checkpoint(path, lr=None):
    """Returns (net, target, adam or None, rng or None, leftover extras)."""
    net, target, extras = load_weights(path)
    adam = None
    if "adam_t" in extras:
        adam = Adam(net.params(), lr if lr is not None else 0.0)
        adam.t = int(extras.pop("adam_t"))
        adam.m = [extras.pop(f"adam_m{i}") for i in range(len(adam.m))]
        adam.v = [extras.pop(f"adam_v{i}") for i in range(len(adam.v))]
    rng = _unpack_rng(extras.pop("rng_state")) if "rng_state" in extras else None
    return net, target, adam, rng, extras


def save_weights(path, net: MLP, target: MLP = None, extra=None):
    arrays = {"sizes": np.array(net.sizes)}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    if target is not None:
        for i, (w, b) in enumerate(zip(target.weights, target.biases)):
            arrays[f"tw{i}"] = w
            arrays[f"tb{i}"] = b
    if extra:
        arrays.update(extra)
    np.savez(path, **arrays)


def load_weights(path):
    """Returns (net, target or None, extras dict)."""
    data = np.load(path, allow_pickle=False)
    sizes = data["sizes"].tolist()
    net = MLP.__new__(MLP)
    net.sizes = sizes
    n_layers = len(sizes) - 1
    net.weights = [data[f"w{i}"].copy() for i in range(n_layers)]
    net.biases = [data[f"b{i}"].copy() for i in range(n_layers)]
    target = None
    if "tw0" in data:
        target = MLP.__new__(MLP)
        target.sizes = sizes
        target.weights = [data[f"tw{i}"].copy() for i in range(n_layers)]
        target.biases = [data[f"tb{i}"].copy() for i in range(n_layers)]
    used = {f"{p}{i}" for i in range(n_layers) for p in ("w", "b", "tw", "tb")}
    used.add("sizes")
    extras = {k: data[k] for k in data.files if k not in used}
    return net, target, extras
