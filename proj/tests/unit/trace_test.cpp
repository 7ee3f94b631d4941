#include "ftcoll/trace.hpp"

#include <gtest/gtest.h>

using namespace ftcoll;

namespace
{
    Trace sample()
    {
        Trace t;
        t.events.push_back({0, 0, EventKind::fail, 1, std::nullopt, 0, std::nullopt, "pre"});
        t.events.push_back({1, 0, EventKind::init, 0, std::nullopt, 1, std::nullopt, "reduce root=0"});
        t.events.push_back({2, 3, EventKind::send, 2, 0, 1, Phase::tree, "v=20 fi=list:1"});
        t.events.push_back({3, 7, EventKind::recv, 0, 2, 1, Phase::tree, "v=20 fi=list:1"});
        t.events.push_back({4, 7, EventKind::deliver, 0, std::nullopt, 1, std::nullopt, "reduce v=20"});
        return t;
    }
} // namespace

TEST(Trace, TextRoundTrip)
{
    const auto t = sample();
    const auto text = t.to_text();
    EXPECT_EQ(Trace::parse(text), t);
    EXPECT_EQ(Trace::parse(text).to_text(), text);
    EXPECT_NE(text.find("seq=2 time=3 kind=send actor=2 peer=0 op=1 phase=tree note=v=20 fi=list:1"),
              std::string::npos);
}

TEST(Trace, DigestTracksContent)
{
    auto a = sample();
    auto b = sample();
    EXPECT_EQ(a.digest(), b.digest());
    b.events[2].time = 4;
    EXPECT_NE(a.digest(), b.digest());
}

TEST(Trace, RejectsMalformed)
{
    EXPECT_THROW(Trace::parse("seq=0 time=0 kind=nope actor=0 peer=- op=0 phase=- note=\n"), MalformedTrace);
    EXPECT_THROW(Trace::parse("seq=0 time=0 kind=send actor=0\n"), MalformedTrace);
    EXPECT_THROW(Trace::parse("seq=1 time=0 kind=init actor=0 peer=- op=1 phase=- note=reduce\n"
                              "seq=1 time=0 kind=init actor=1 peer=- op=1 phase=- note=reduce\n"),
                 MalformedTrace);
    EXPECT_THROW(Trace::parse("seq=0 time=0 kind=send actor=0 peer=1 op=1 phase=sideways note=\n"), MalformedTrace);
}

TEST(Trace, NoteFields)
{
    EXPECT_EQ(note_field("v=1,2 fi=bit:0", "v"), "1,2");
    EXPECT_EQ(note_field("v=1,2 fi=bit:0", "fi"), "bit:0");
    EXPECT_FALSE(note_field("reduce", "v"));
    EXPECT_EQ(note_head("reduce v=20"), "reduce");
}
