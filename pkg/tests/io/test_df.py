"""Test functions in owid.charnum.io.df module.

"""
import pandas as pd
from pytest import raises

from owid.charnum.io.df import to_file


class TestToFile:
    df = pd.DataFrame({"family": ["s2_perturbed", "s2_perturbed"], "eps": [0.0, 0.1], "value": [2.0, 1.9999]})

    def test_csv_without_dummy_index(self, tmpdir):
        file = tmpdir / "out" / "sweep.csv"
        to_file(self.df, file)
        assert file.read_text("utf-8").splitlines()[0] == "family,eps,value"
        assert pd.read_csv(file).equals(self.df)

    def test_keeps_real_index(self, tmpdir):
        file = tmpdir / "indexed.csv"
        to_file(self.df.set_index("eps"), file)
        assert pd.read_csv(file).columns[0] == "eps"

    def test_no_overwrite(self, tmpdir):
        file = tmpdir / "sweep.csv"
        to_file(self.df, file)
        with raises(FileExistsError):
            to_file(self.df, file, overwrite=False)

    def test_unknown_extension(self, tmpdir):
        with raises(ValueError):
            to_file(self.df, tmpdir / "sweep.unknown")
