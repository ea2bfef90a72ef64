"""
Module containing classes used to parse the section based scenario file format.

Sections are introduced by a [name] header and contain one whitespace separated entry per line.
Lines beginning with ; are comments and #include pulls in the sections of another file,
resolved relative to the including file.  Nesting of sections is not supported.
"""
import os

from collections import OrderedDict


class Section:
    """
    Class representing a single section of the config file.
    """
    __slots__ = ["name", "filename", "lineno", "_lines", "_linenos"]

    def __init__(self, name=None, filename=None, lineno=None):
        """
        Create a section and storage for the lines it contains.

        :param name: Name of section
        :param filename: File the section header was read from
        :param lineno: Line number of the section header
        """
        self.name = name
        self.filename = filename
        self.lineno = lineno
        self._lines = []
        self._linenos = []

    def __len__(self):
        return len(self._lines)

    def __iter__(self):
        return iter(self._lines)

    def __getitem__(self, item):
        return self._lines[item]

    def add_line(self, line, lineno=None):
        self._lines.append(line)
        self._linenos.append(lineno)

    def numbered(self):
        """
        Iterate over lines together with the line number they were read from.

        :return: Iterator of (line number, token tuple)
        """
        return zip(self._linenos, self._lines)


class CFGError(Exception):
    """
    Exception raised for a malformed config file.

    Arguments are message, filename and line number.
    """
    def __str__(self):
        msg, filename, lineno = (self.args + (None, None))[:3]
        return "{0}:{1}: {2}".format(filename, lineno, msg)

    def __repr__(self):
        return "CFGError({0})".format(str(self))

    @property
    def filename(self):
        return self.args[1] if len(self.args) > 1 else None

    @property
    def lineno(self):
        return self.args[2] if len(self.args) > 2 else None


class DuplicateSectionError(CFGError):
    """
    Exception used to indicate that a section has appeared twice in a file.
    """
    def __str__(self):
        return "{0}:{1}: Section {2} appears twice in file.".format(self.filename, self.lineno, self.section)

    def __repr__(self):
        return "Section {0} appears twice in file {1}.".format(self.section, self.filename)

    def __init__(self, section, filename, lineno=None):
        super().__init__("duplicate section", filename, lineno)
        self.section = section


class CFG:
    """
    Class representing a CFG file.

    Contains a dictionary of Sections.
    """
    __slots__ = ["filename", "_sections"]

    def __init__(self, filename=None):
        """
        Parse a config file and extract Sections.

        :param filename: Name of file to read
        :return: Instance of CFG
        """
        self.filename = filename
        self._sections = OrderedDict()

        with open(self.filename) as f:
            curr_section = None
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith(";"):
                    continue

                elif line.startswith("#include"):
                    try:
                        include_name = line.split()[1]
                    except IndexError:
                        raise CFGError("#include without a file name", self.filename, lineno)
                    cfg2 = CFG(os.path.join(os.path.dirname(self.filename), include_name))
                    for name, section in cfg2._sections.items():
                        if name in self._sections:
                            raise DuplicateSectionError(name, self.filename, lineno)
                        self._sections[name] = section
                    continue

                elif line.startswith("["):
                    if not line.endswith("]"):
                        raise CFGError("unterminated section header", self.filename, lineno)
                    curr_section = line.strip("[ ]")
                    if curr_section in self._sections:
                        raise DuplicateSectionError(curr_section, self.filename, lineno)
                    self._sections[curr_section] = Section(name=curr_section,
                                                           filename=self.filename, lineno=lineno)
                    continue

                if curr_section is None:
                    raise CFGError("entry outside of any section", self.filename, lineno)

                # Trailing comments are allowed after an entry
                line = line.split(";", 1)[0]
                toks = tuple(line.split())
                self._sections[curr_section].add_line(toks, lineno)

    def __len__(self):
        return len(self._sections)

    def __iter__(self):
        return iter(self._sections.values())

    def __contains__(self, item):
        return item in self._sections

    def __getitem__(self, item):
        return self._sections[item]
