"""Typed exceptions and warnings shared across the package."""


class PhraseSynthError(Exception):
    """Base class for all errors raised by this package."""


# --- MIDI ingest ---

class MidiError(PhraseSynthError):
    pass


class MalformedHeader(MidiError):
    """SMF header chunk is missing, truncated, or has a bad magic/length."""


class MalformedTrack(MidiError):
    """Track chunk data is truncated or structurally invalid."""


class UnsupportedFormat(MidiError):
    """SMF format 2 or SMPTE time division; neither is supported."""


class DanglingNoteOnWarning(UserWarning):
    """Note-on without a matching note-off; the note was closed at end of track."""


class DroppedNotesWarning(UserWarning):
    """Notes outside the pianoroll pitch range were dropped."""


class InvalidRange(PhraseSynthError):
    """Empty or inverted pitch range, or a non-positive frame rate."""


# --- DSP ---

class InvalidGeometry(PhraseSynthError):
    """STFT geometry violates a precondition (power of two, hop bound, COLA)."""


class UnsupportedCodec(PhraseSynthError):
    """WAV format tag or sample layout this decoder does not handle."""


class MalformedRiff(PhraseSynthError):
    """RIFF/WAVE container is truncated or structurally invalid."""


# --- Models ---

class InvalidConfig(PhraseSynthError):
    """Network configuration violates an invariant."""


class ShapeMismatch(PhraseSynthError):
    """Tensor shapes are inconsistent with the configuration."""


class MissingCondition(PhraseSynthError):
    """Conditioning vector required (condition_dim > 0) but not supplied."""


class InvalidBandCount(PhraseSynthError):
    """Band count outside 1..F."""


# --- Training / checkpoints ---

class AlignmentError(PhraseSynthError):
    """Pianoroll and spectrogram lengths differ by more than the tolerance."""


class EmptyDataset(PhraseSynthError):
    """Training requires at least one aligned pair."""


class NonFiniteLoss(PhraseSynthError):
    """Loss became NaN or infinite during training."""

    def __init__(self, step: int, value: float):
        super().__init__(f"non-finite loss {value!r} at step {step}")
        self.step = step
        self.value = value


class VersionMismatch(PhraseSynthError):
    """Checkpoint file has an unsupported format version."""


class CorruptFile(PhraseSynthError):
    """Checkpoint file failed its integrity check."""
