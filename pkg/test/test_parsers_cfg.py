import unittest

from ftsdos.parsers.cfg import CFG, CFGError, DuplicateSectionError


class TestParsersCFG(unittest.TestCase):
    def test_cfg_iterate_sections(self):
        cfg = CFG("test/data/sections.cfg")
        self.assertEqual(3, len(cfg))
        self.assertEqual(["scenario", "policy", "dos_intervals"], [section.name for section in cfg])

    def test_cfg_iterate_lines(self):
        lines = list(CFG("test/data/sections.cfg")["scenario"])
        self.assertEqual([("schema_version", "1"), ("x0", "3.0", "-1.5")], lines)

    def test_cfg_line_numbers(self):
        section = CFG("test/data/sections.cfg")["scenario"]
        self.assertEqual(2, section.lineno)
        self.assertEqual([3, 4], [lineno for lineno, _ in section.numbered()])

    def test_cfg_get_section(self):
        cfg = CFG("test/data/sections.cfg")
        self.assertTrue("policy" in cfg)
        self.assertFalse("outputs" in cfg)
        self.assertEqual(("kind", "hybrid_etm"), cfg["policy"][0])

    def test_include_file(self):
        section = CFG("test/data/sections.cfg")["dos_intervals"]
        self.assertEqual(2, len(section))
        self.assertEqual(("1.0", "0.5"), section[1])
        self.assertTrue(section.filename.endswith("included.cfg"))

    def test_cfg_duplicate_error(self):
        with self.assertRaises(DuplicateSectionError) as ctx:
            CFG("test/data/twice.cfg")
        self.assertEqual("twice", ctx.exception.section)
        self.assertEqual(4, ctx.exception.lineno)

    def test_include_duplicate_error(self):
        with self.assertRaises(DuplicateSectionError):
            CFG("test/data/include_twice.cfg")

    def test_orphan_line(self):
        with self.assertRaises(CFGError) as ctx:
            CFG("test/data/orphan.cfg")
        self.assertEqual(2, ctx.exception.lineno)
        self.assertIn("orphan.cfg:2:", str(ctx.exception))

    def test_unterminated_header(self):
        with self.assertRaises(CFGError) as ctx:
            CFG("test/data/unterminated.cfg")
        self.assertEqual(1, ctx.exception.lineno)


if __name__ == '__main__':
    unittest.main()
