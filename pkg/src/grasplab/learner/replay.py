"""Fixed-capacity FIFO transition store with uniform sampling.

Transitions are kept as structure-of-arrays; once full, each new insert
overwrites the oldest slot.  Sampling is uniform over the filled region.
"""

import numpy as np

from grasplab.errors import DomainError


class ReplayBuffer:
    def __init__(self, capacity, image_shape, flat_dim, act_dim, float32_storage=False):
        if capacity < 1:
            raise DomainError(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        dtype = np.float32 if float32_storage else np.float64
        h, w = image_shape
        self.images = np.zeros((capacity, h, w), dtype=dtype)
        self.flats = np.zeros((capacity, flat_dim), dtype=dtype)
        self.actions = np.zeros((capacity, act_dim), dtype=dtype)
        self.rewards = np.zeros(capacity, dtype=dtype)
        self.dones = np.zeros(capacity, dtype=np.bool_)
        self.next_images = np.zeros((capacity, h, w), dtype=dtype)
        self.next_flats = np.zeros((capacity, flat_dim), dtype=dtype)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, image, flat, action, reward, done, next_image, next_flat):
        i = self.cursor
        self.images[i] = image
        self.flats[i] = flat
        self.actions[i] = action
        self.rewards[i] = reward
        self.dones[i] = done
        self.next_images[i] = next_image
        self.next_flats[i] = next_flat
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng):
        """Uniform minibatch as a dict of float64 arrays."""
        if self.size == 0:
            raise DomainError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return {
            "images": self.images[idx].astype(np.float64),
            "flats": self.flats[idx].astype(np.float64),
            "actions": self.actions[idx].astype(np.float64),
            "rewards": self.rewards[idx].astype(np.float64),
            "dones": self.dones[idx].astype(np.float64),
            "next_images": self.next_images[idx].astype(np.float64),
            "next_flats": self.next_flats[idx].astype(np.float64),
        }
