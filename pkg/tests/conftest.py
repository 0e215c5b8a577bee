from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synthdata
from aiwork.backends import MockBackend
from aiwork.classify import IwaCatalog, PipelineConfig, run_pipeline
from aiwork.corpus import iter_corpus, load_corpus
from aiwork.taxonomy import load_onet, merge_soc


@pytest.fixture(scope="session")
def small_onet_dir(tmp_path_factory) -> Path:
    directory = tmp_path_factory.mktemp("onet_small")
    synthdata.write_onet_small(directory)
    return directory


@pytest.fixture(scope="session")
def small_bls_files(tmp_path_factory) -> tuple[Path, Path]:
    directory = tmp_path_factory.mktemp("bls_small")
    crosswalk = directory / "crosswalk.csv"
    oews = directory / "oews.csv"
    synthdata.write_crosswalk(crosswalk)
    synthdata.write_oews(oews)
    return crosswalk, oews


@pytest.fixture(scope="session")
def small_store(small_onet_dir, small_bls_files):
    store = load_onet(small_onet_dir)
    crosswalk, oews = small_bls_files
    return merge_soc(store, crosswalk, oews)


@pytest.fixture(scope="session")
def small_catalog(small_store) -> IwaCatalog:
    return IwaCatalog(small_store.iwa_catalog())


@pytest.fixture(scope="session")
def mock_backend() -> MockBackend:
    return MockBackend(keywords=synthdata.mock_keywords())


@pytest.fixture(scope="session")
def corpus_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("corpus") / "corpus.jsonl"
    synthdata.write_corpus(path, n=1000)
    return path


@pytest.fixture(scope="session")
def corpus_handle(corpus_path):
    return load_corpus(corpus_path, "uniform")


@pytest.fixture(scope="session")
def oracle_labels(corpus_path, small_catalog, mock_backend):
    """Labels for the 1,000-conversation synthetic corpus (one mock run
    shared across the suite)."""
    return [
        result
        for result in run_pipeline(
            iter_corpus(corpus_path), small_catalog, mock_backend, PipelineConfig()
        )
    ]
