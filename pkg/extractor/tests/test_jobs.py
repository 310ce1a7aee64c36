from __future__ import annotations

import json

import numpy as np
import pytest

# Cross-component validation: everything we emit must load and work in the
# evaluation library.
from cleval.harness import RunConfig, run
from cleval.store import load_manifest, load_table
from cleval.zeroshot import build_head_embedding_pooling

from embex.encoders import StubEncoder
from embex.errors import EmptyClassList, ExtractorError, MissingPlaceholder
from embex.formats import sha256_file
from embex.jobs import ExtractJob, extract_images, extract_texts, read_templates

from conftest import make_cifar100_files, make_folder_dataset, write_prompt_files


def image_job(tmp_path, dataset, **overrides):
    doc = dict(
        dataset=dataset,
        split="test",
        model="stub:32",
        out_dir=str(tmp_path / "out"),
        data_root=str(tmp_path),
        batch_size=5,
    )
    doc.update(overrides)
    return ExtractJob(**doc)


class TestExtractImages:
    def test_row_count_and_alignment(self, tmp_path):
        make_folder_dataset(tmp_path / "toy", num_classes=3, per_class=4)
        paths = extract_images(image_job(tmp_path, f"folder:{tmp_path / 'toy'}"))
        table = load_table(paths["cemb"])
        assert table.num_rows == 12
        assert table.normalized
        assert table.labels.tolist() == [0] * 4 + [1] * 4 + [2] * 4

    def test_identical_images_identical_rows(self, tmp_path):
        make_folder_dataset(
            tmp_path / "toy", num_classes=2, per_class=3, duplicate_first=True
        )
        paths = extract_images(image_job(tmp_path, f"folder:{tmp_path / 'toy'}"))
        table = load_table(paths["cemb"])
        np.testing.assert_array_equal(table.data[0], table.data[1])
        assert not np.allclose(table.data[0], table.data[2])

    def test_manifest_digest_matches_file(self, tmp_path):
        make_folder_dataset(tmp_path / "toy")
        paths = extract_images(image_job(tmp_path, f"folder:{tmp_path / 'toy'}"))
        manifest_doc = json.loads(paths["manifest"].read_text())
        assert manifest_doc["digests"][paths["cemb"].name] == sha256_file(paths["cemb"])
        assert manifest_doc["digests"][paths["clbl"].name] == sha256_file(paths["clbl"])
        # And it parses as a manifest on the evaluation side.
        manifest = load_manifest(paths["manifest"])
        assert manifest.class_names == ["class_00", "class_01", "class_02"]
        assert manifest.source_model == "stub:32"

    def test_rerun_reproducible(self, tmp_path):
        make_folder_dataset(tmp_path / "toy")
        job_a = image_job(tmp_path, f"folder:{tmp_path / 'toy'}", out_dir=str(tmp_path / "a"))
        job_b = image_job(tmp_path, f"folder:{tmp_path / 'toy'}", out_dir=str(tmp_path / "b"))
        a = extract_images(job_a)
        b = extract_images(job_b)
        ta, tb = load_table(a["cemb"]), load_table(b["cemb"])
        np.testing.assert_allclose(ta.data, tb.data, atol=1e-5)
        assert a["clbl"].read_bytes() == b["clbl"].read_bytes()
        assert a["manifest"].read_text() == b["manifest"].read_text()

    def test_batch_size_does_not_change_rows(self, tmp_path):
        make_folder_dataset(tmp_path / "toy", num_classes=3, per_class=5)
        small = extract_images(
            image_job(tmp_path, f"folder:{tmp_path / 'toy'}",
                      out_dir=str(tmp_path / "s"), batch_size=2)
        )
        large = extract_images(
            image_job(tmp_path, f"folder:{tmp_path / 'toy'}",
                      out_dir=str(tmp_path / "l"), batch_size=64)
        )
        np.testing.assert_allclose(
            load_table(small["cemb"]).data, load_table(large["cemb"]).data, atol=1e-5
        )

    def test_domain_ids_written(self, tmp_path):
        make_folder_dataset(tmp_path / "core50", num_classes=2, per_class=2,
                            domains=["s1", "s2"])
        paths = extract_images(image_job(tmp_path, "core50"))
        table = load_table(paths["cemb"])
        assert table.domain_ids.tolist() == [0, 0, 0, 0, 1, 1, 1, 1]
        assert load_manifest(paths["manifest"]).domain_names == ["s1", "s2"]

    def test_cifar100_native(self, tmp_path):
        make_cifar100_files(tmp_path, rows_per_split=8)
        paths = extract_images(image_job(tmp_path, "cifar100"))
        table = load_table(paths["cemb"])
        assert table.num_rows == 8
        assert paths["cemb"].name == "cifar100_test.cemb"


class TestExtractTexts:
    def test_single_template_row_per_class(self, tmp_path):
        prompts, names = write_prompt_files(tmp_path)
        job = ExtractJob(
            dataset="toy", split="test", model="stub:16",
            out_dir=str(tmp_path / "out"),
            prompt_file=str(prompts), class_names_file=str(names),
        )
        paths = extract_texts(job)
        table = load_table(paths["cemb"])
        assert table.num_rows == 3  # 1 template x 3 classes
        assert table.labels.tolist() == [0, 1, 2]

    def test_same_text_identical_rows(self, tmp_path):
        prompts, names = write_prompt_files(
            tmp_path, templates=("a photo of a {}.", "a photo of a {}!")
        )
        job = ExtractJob(
            dataset="toy", split="test", model="stub:16",
            out_dir=str(tmp_path / "out"),
            prompt_file=str(prompts), class_names_file=str(names),
        )
        paths = extract_texts(job)
        again = extract_texts(job)
        a, b = load_table(paths["cemb"]), load_table(again["cemb"])
        np.testing.assert_array_equal(a.data, b.data)

    def test_grid_accepted_by_evaluation_head_builder(self, tmp_path):
        prompts, names = write_prompt_files(
            tmp_path,
            templates=("a photo of a {}.", "a bad photo of a {}.", "art of a {}."),
            names=("ant", "bee", "cat", "dog"),
        )
        job = ExtractJob(
            dataset="toy", split="test", model="stub:24",
            out_dir=str(tmp_path / "out"),
            prompt_file=str(prompts), class_names_file=str(names),
        )
        paths = extract_texts(job)
        table = load_table(paths["cemb"])
        manifest = load_manifest(paths["manifest"])
        # The grid-completeness check runs inside the head builder.
        head = build_head_embedding_pooling(table, manifest)
        assert head.num_classes == 4

    def test_template_without_placeholder(self, tmp_path):
        prompts, names = write_prompt_files(tmp_path, templates=("no slot here",))
        with pytest.raises(MissingPlaceholder):
            read_templates(prompts)
        job = ExtractJob(
            dataset="toy", split="test", model="stub:16",
            out_dir=str(tmp_path / "out"),
            prompt_file=str(prompts), class_names_file=str(names),
        )
        with pytest.raises(MissingPlaceholder):
            extract_texts(job)

    def test_empty_class_list(self, tmp_path):
        prompts, _ = write_prompt_files(tmp_path)
        empty = tmp_path / "empty.txt"
        empty.write_text("\n")
        job = ExtractJob(
            dataset="toy", split="test", model="stub:16",
            out_dir=str(tmp_path / "out"),
            prompt_file=str(prompts), class_names_file=str(empty),
        )
        with pytest.raises(EmptyClassList):
            extract_texts(job)

    def test_variant_recorded(self, tmp_path):
        prompts, names = write_prompt_files(tmp_path)
        job = ExtractJob(
            dataset="toy", split="test", model="stub:16",
            out_dir=str(tmp_path / "out"), variant="curated",
            prompt_file=str(prompts), class_names_file=str(names),
        )
        paths = extract_texts(job)
        doc = json.loads(paths["manifest"].read_text())
        assert doc["class_name_variant"] == "curated"


class TestJobValidation:
    def test_model_required(self, tmp_path):
        with pytest.raises(ExtractorError):
            ExtractJob(dataset="cifar100", split="test", model="",
                       out_dir=str(tmp_path))

    def test_bad_variant(self, tmp_path):
        with pytest.raises(ExtractorError):
            ExtractJob(dataset="cifar100", split="test", model="stub:8",
                       out_dir=str(tmp_path), variant="nonsense")


def test_end_to_end_with_evaluation_harness(tmp_path):
    """Extracted files drive a full evaluation run in the other package."""
    make_folder_dataset(tmp_path / "toy", num_classes=4, per_class=6)
    prompts, names = write_prompt_files(
        tmp_path, names=("class_00", "class_01", "class_02", "class_03")
    )
    encoder = StubEncoder(32)
    images = extract_images(image_job(tmp_path, f"folder:{tmp_path / 'toy'}"), encoder)
    texts = extract_texts(
        ExtractJob(
            dataset="toy", split="test", model="stub:32",
            out_dir=str(tmp_path / "out"),
            prompt_file=str(prompts), class_names_file=str(names),
        ),
        encoder,
    )
    report = run(
        RunConfig(
            scenario="class_incremental",
            test_embeddings=str(images["cemb"]),
            text_embeddings=str(texts["cemb"]),
            report=str(tmp_path / "report.json"),
            steps=4,
            seed=0,
        )
    )
    assert report.num_steps == 4
    assert all(0.0 <= a <= 1.0 for a in report.accuracies())
    assert str(images["cemb"]) in report.input_digests
