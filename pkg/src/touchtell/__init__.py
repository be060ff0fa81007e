"""Touch-and-sound affect decoding: sensor model, synthetic study, features, stats, decoders."""

from .core import (AUDIO_FEATURES, EMOTIONS, FEATURE_NAMES, GESTURES, TACTILE_FEATURES,
                   AudioClip, DatasetManifest, SensorFrame, TouchRecording, TrialRecord)

__version__ = "0.1.0"

__all__ = ["AUDIO_FEATURES", "EMOTIONS", "FEATURE_NAMES", "GESTURES", "TACTILE_FEATURES",
           "AudioClip", "DatasetManifest", "SensorFrame", "TouchRecording", "TrialRecord"]
