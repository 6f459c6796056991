from django.conf import settings
from rest_framework import serializers

from lpformat.formats import FORMATS
from lpgemm.kernels import KERNELS
from ozgemm.pipeline import GemmConfig

from .suites import SUITES
from .utils import INITS

FORMAT_CHOICES = list(FORMATS)
MAX_SEED = (1 << 64) - 1


class GemmOptionsSerializer(serializers.Serializer):
    m = serializers.IntegerField(min_value=1)
    n = serializers.IntegerField(min_value=1)
    k = serializers.IntegerField(min_value=1)
    type2 = serializers.ChoiceField(choices=FORMAT_CHOICES)
    type3 = serializers.ChoiceField(choices=FORMAT_CHOICES)
    kblock = serializers.IntegerField(min_value=0, default=0)
    fp64emu = serializers.BooleanField(default=False)
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED)
    max_slices = serializers.IntegerField(min_value=1, allow_null=True, default=None)
    kernel = serializers.ChoiceField(choices=KERNELS)
    init = serializers.ChoiceField(choices=INITS, default="uniform")
    lo = serializers.FloatField(default=1.0)
    hi = serializers.FloatField(default=10.0)
    spread = serializers.IntegerField(min_value=0, max_value=500, default=8)

    def validate(self, data):
        if not data["lo"] < data["hi"]:
            raise serializers.ValidationError("lo must be smaller than hi")
        if data["kblock"] > data["k"]:
            raise serializers.ValidationError("kblock cannot exceed k")
        return data

    def config(self):
        data = self.validated_data
        return GemmConfig(
            type2=data["type2"],
            type3=data["type3"],
            k_block=data["kblock"],
            fp64_emulation=data["fp64emu"],
            max_slices=data["max_slices"],
            seed=data["seed"],
            kernel=data["kernel"],
            workers=settings.OZ_WORKERS,
        )


class AccuracyOptionsSerializer(GemmOptionsSerializer):
    abs_error = serializers.BooleanField(default=False)


class SweepOptionsSerializer(GemmOptionsSerializer):
    kblocks = serializers.CharField()

    def validate_kblocks(self, value):
        try:
            blocks = [int(part) for part in value.split(",") if part.strip()]
        except ValueError:
            raise serializers.ValidationError("Expected a comma-separated list of integers")
        if not blocks or any(b < 0 for b in blocks):
            raise serializers.ValidationError("Block sizes must be non-negative")
        return blocks

    def validate(self, data):
        data = super().validate(data)
        if any(b > data["k"] for b in data["kblocks"]):
            raise serializers.ValidationError("Every block size must be at most k")
        return data


class VerifyOptionsSerializer(serializers.Serializer):
    suite = serializers.ChoiceField(choices=SUITES)
    trials = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED)


class RunReportSerializer(serializers.Serializer):
    schema_version = serializers.IntegerField()
    command = serializers.CharField()
    config = serializers.DictField()
    stats = serializers.DictField(allow_null=True)
    accuracy = serializers.DictField(allow_null=True)
    checks = serializers.ListField(child=serializers.DictField(), allow_null=True)
    matrix_path = serializers.CharField(allow_null=True)
    timings = serializers.DictField()
