"""Regenerates the loudness reference fixtures.

Run from this directory: python3 make_loudness_reference.py
Writes pink_noise_m20.wav (32-bit float, 22050 Hz, mono, 8 s) and
loudness_reference.json with readings from two meters: libebur128 (via
pyebur128) and pyloudnorm.
"""
import json

import numpy as np
import pyebur128
import pyloudnorm
from scipy.io import wavfile
from scipy.signal import resample_poly

RATE = 22050
N = 8 * RATE


def pink_noise(n, seed):
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / RATE)
    shaping = np.ones_like(freqs)
    shaping[1:] = 1.0 / np.sqrt(freqs[1:])
    shaping[0] = 0.0
    pink = np.fft.irfft(spectrum * shaping, n)
    rms = np.sqrt(np.mean(pink ** 2))
    return pink * (10 ** (-20 / 20) / rms)


def sine(freq, rate, n):
    t = np.arange(n, dtype=np.float64)
    return np.sin(2 * np.pi * freq * t / rate).astype(np.float32)


def measure_pyloudnorm(x, rate):
    return float(pyloudnorm.Meter(rate).integrated_loudness(np.asarray(x, dtype=np.float64)))


def measure_ebur128(x, rate):
    state = pyebur128.R128State(1, rate, pyebur128.MeasurementMode.MODE_I)
    x = np.asarray(x, dtype=np.float64)
    state.add_frames(x, len(x))
    return float(pyebur128.get_loudness_global(state))


noise = pink_noise(N, 1770).astype(np.float32)
assert np.max(np.abs(noise)) < 1.0
wavfile.write("pink_noise_m20.wav", RATE, noise)

signals = {
    "sine_997hz_full_scale_8s_22050": (sine(997.0, RATE, N), RATE),
    "sine_997hz_full_scale_8s_48000": (sine(997.0, 48000, 8 * 48000), 48000),
    "pink_noise_m20_22050": (noise, RATE),
    "pink_noise_m20_48000": (resample_poly(noise.astype(np.float64), 320, 147), 48000),
}
reference = {
    "libebur128": {k: measure_ebur128(x, r) for k, (x, r) in signals.items()},
    "pyloudnorm": {k: measure_pyloudnorm(x, r) for k, (x, r) in signals.items()},
}
with open("loudness_reference.json", "w") as f:
    json.dump(reference, f, indent=2)
    f.write("\n")
print(json.dumps(reference, indent=2))
