import struct

import attrs

WORD_MAX = (1 << 64) - 1


def _word_range(instance, attribute, value):
    if not 0 <= value <= WORD_MAX:
        raise ValueError(f"{attribute.name} must be an unsigned 64-bit integer, got {value}")


@attrs.frozen
class F64Word:
    """An FP64 value held as its 64-bit pattern."""

    bits: int = attrs.field(converter=int, validator=_word_range)

    @classmethod
    def from_float(cls, value):
        return cls(struct.unpack("<Q", struct.pack("<d", value))[0])

    @classmethod
    def encode(cls, sign, biased_exp, fraction):
        return cls((sign & 1) << 63 | (biased_exp & 0x7FF) << 52 | fraction & ((1 << 52) - 1))

    def to_float(self):
        return struct.unpack("<d", struct.pack("<Q", self.bits))[0]

    @property
    def sign(self):
        return self.bits >> 63

    @property
    def biased_exp(self):
        return (self.bits >> 52) & 0x7FF

    @property
    def fraction(self):
        return self.bits & ((1 << 52) - 1)

    def decode(self):
        return self.sign, self.biased_exp, self.fraction

    def __float__(self):
        return self.to_float()


@attrs.frozen
class Mant128:
    """A 128-bit product as four 32-bit words, least significant first."""

    parts: tuple = attrs.field(converter=tuple)

    @parts.validator
    def _check(self, attribute, value):
        if len(value) != 4 or any(not 0 <= p < 1 << 32 for p in value):
            raise ValueError(f"parts must be four 32-bit words, got {value}")

    @property
    def value(self):
        return sum(int(p) << (32 * i) for i, p in enumerate(self.parts))

    @property
    def hi(self):
        return int(self.parts[3]) << 32 | int(self.parts[2])

    @property
    def lo(self):
        return int(self.parts[1]) << 32 | int(self.parts[0])
