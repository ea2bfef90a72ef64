import unittest

import numpy as np

from ftsdos.classk import ClassKForms, ClassKFn, PowerLaw, Tabulated, eval_classk


class ClassKFormsTest(unittest.TestCase):
    def test_forms_registered(self):
        forms = ClassKForms()
        self.assertIn("PowerLaw", forms)
        self.assertIn("Tabulated", forms)
        self.assertIs(PowerLaw, forms.PowerLaw)
        self.assertIs(Tabulated, forms["Tabulated"])

    def test_new_form_discovered(self):
        class Cubic(ClassKFn):
            def __call__(self, r):
                return np.power(self._check_radius(r), 3)

            def inverse(self, v):
                return np.cbrt(self._check_radius(v))

            @property
            def params(self):
                return ()

            @classmethod
            def from_params(cls, *params):
                return cls()

        forms = ClassKForms()
        self.assertIn("Cubic", forms)
        self.assertAlmostEqual(8., float(forms.create("cubic")(2.)))

    def test_create(self):
        forms = ClassKForms()
        f = forms.create("powerlaw", 2., 2.)
        self.assertIsInstance(f, PowerLaw)
        self.assertEqual((2., 2.), f.params)
        with self.assertRaises(ValueError):
            forms.create("exponential", 1.)


class PowerLawTest(unittest.TestCase):
    def test_call_inverse(self):
        f = PowerLaw(3., 2.)
        np.testing.assert_allclose([0., 3., 12.], f(np.array([0., 1., 2.])))
        np.testing.assert_allclose([0., 1., 2.], f.inverse(np.array([0., 3., 12.])))

    def test_invalid(self):
        with self.assertRaises(ValueError):
            PowerLaw(0., 2.)
        with self.assertRaises(ValueError):
            PowerLaw(1., -1.)
        with self.assertRaises(ValueError):
            PowerLaw.from_params(1.)

    def test_negative_radius(self):
        with self.assertRaises(ValueError):
            PowerLaw(1., 2.)(-0.1)

    def test_describe(self):
        self.assertEqual({"form": "PowerLaw", "params": [2., 2.]}, PowerLaw(2., 2.).describe())


class TabulatedTest(unittest.TestCase):
    def setUp(self):
        self.radii = np.linspace(0., 3., 31)
        self.f = Tabulated(self.radii, self.radii ** 2)

    def test_interpolates(self):
        np.testing.assert_allclose(self.radii ** 2, self.f(self.radii), atol=1e-12)
        self.assertAlmostEqual(1.5 ** 2, float(self.f(1.5)), places=3)

    def test_inverse(self):
        self.assertAlmostEqual(2., self.f.inverse(4.), places=6)
        self.assertEqual(0., self.f.inverse(0.))
        np.testing.assert_allclose([1., 2.], self.f.inverse(np.array([1., 4.])), atol=1e-6)

    def test_beyond_table(self):
        with self.assertRaises(ValueError):
            self.f(3.5)
        with self.assertRaises(ValueError):
            self.f.inverse(10.)

    def test_invalid_tables(self):
        with self.assertRaises(ValueError):
            Tabulated([0., 1., 1.], [0., 1., 2.])
        with self.assertRaises(ValueError):
            Tabulated([0.1, 1.], [0., 1.])
        with self.assertRaises(ValueError):
            Tabulated([0., 1., 2.], [0., 2., 1.])

    def test_from_params(self):
        f = Tabulated.from_params(0., 0., 1., 2., 2., 5.)
        np.testing.assert_allclose([0., 1., 2.], f.radii)
        np.testing.assert_allclose([0., 2., 5.], f.values)
        self.assertEqual((0., 0., 1., 2., 2., 5.), f.params)
        with self.assertRaises(ValueError):
            Tabulated.from_params(0., 0., 1.)


class EvalTest(unittest.TestCase):
    def test_eval_classk(self):
        self.assertEqual(8., eval_classk(PowerLaw(2., 2.), 2.))
        self.assertEqual(0., eval_classk(PowerLaw(2., 2.), 0.))
        with self.assertRaises(ValueError):
            eval_classk(PowerLaw(2., 2.), -1.)


if __name__ == '__main__':
    unittest.main()
