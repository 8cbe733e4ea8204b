"""Adam and the two learning-rate schedules used by the trainers."""

import math

import numpy as np


class Adam:
    """Adam over a dict of named numpy parameters, updated in place."""

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads, lr=None):
        lr = self.lr if lr is None else lr
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k in params:
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            params[k] -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def cosine_lr(base_lr, epoch, epochs):
    # annealed to zero at epoch == epochs; stepped once per epoch
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * epoch / epochs))


def multistep_lr(base_lr, epoch, milestones, decay):
    return base_lr * decay ** sum(1 for m in milestones if epoch >= m)
